"""Bregman projections onto Conv(A) for separable Legendre functions.

All solvers work from the dual point ``theta = grad F(w)`` rather than from w
itself, so a strongly negative dual coordinate never has to survive a round
trip through ``exp`` or a negative power.  The KKT conditions of
``min_x D_F(x, w)`` over ``{A_eq x = b_eq, A_ub x <= b_ub}`` give
``x = grad_conj(theta - A_eq^T lam - A_ub^T mu)`` with ``mu >= 0``; each solver
finds those multipliers.
"""

from __future__ import annotations

import math

import numpy as np

from .action_sets import ActionSet, ConstraintSystem, Exp2LowerBound, MSet, ParallelGames
from .legendre import LegendreFunction, bregman, solve_decreasing


class ProjectionError(ArithmeticError):
    def __init__(self, message, residual=math.nan):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def capped_simplex(F: LegendreFunction, theta, total: float) -> np.ndarray:
    """Project onto ``{0 <= x <= 1, sum x = total}`` given dual point theta.

    The optimum caps the coordinates with the largest theta at 1 and shifts
    the rest by a common scalar; capping proceeds one coordinate at a time.
    """
    theta = np.asarray(theta, dtype=float)
    k_all = theta.size
    if not 0 < total <= k_all:
        raise ProjectionError(f"infeasible block sum {total} for {k_all} coordinates")
    if total == k_all:
        return np.ones(k_all)
    order = np.argsort(-theta, kind="stable")
    x = np.ones(k_all)
    for k in range(int(math.ceil(total))):
        rest = order[k:]
        t = F.solve_shift(theta[rest], total - k)
        vals = F.grad_conj(theta[rest] - t)
        if vals[0] <= 1.0:
            x[rest] = vals
            return x
    raise ProjectionError("capping did not terminate")


def _interval_pair(F, theta, first, second):
    """Optimal s for x[first] = s, x[second] = 1 - s."""
    q = len(first)
    delta = (theta[first].sum() - theta[second].sum()) / q
    if F.name == "negentropy":
        # log(s / (1 - s)) = delta
        return 1.0 / (1.0 + math.exp(-delta)) if delta > -700 else math.exp(delta)

    def h(t):
        # parametrise s = sigmoid(t) so both ends stay representable
        s, r = 1.0 / (1.0 + math.exp(-t)), 1.0 / (1.0 + math.exp(t))
        return delta - float(F.grad(np.array([s]))[0] - F.grad(np.array([r]))[0])

    t = solve_decreasing(h, -700.0, 700.0, xtol=1e-13)
    return 1.0 / (1.0 + math.exp(-t))


def dual_coordinate_ascent(F: LegendreFunction, theta, cs: ConstraintSystem,
                           tol: float = 1e-11, max_sweeps: int = 10_000) -> np.ndarray:
    """Generic solver: cyclic exact maximisation of the dual, one constraint at a time.

    Each step is the Bregman projection onto a single hyperplane or half-space
    with its previous multiplier removed (Hildreth's method), which is
    Dykstra's correction scheme expressed in the dual.  Rows of the form
    ``-x_i <= 0`` are dropped since grad_conj always lands in (0, inf)^d.
    """
    theta = np.asarray(theta, dtype=float)
    rows = [(a, b, True) for a, b in zip(cs.A_eq, cs.b_eq)]
    for a, b in zip(cs.A_ub, cs.b_ub):
        if np.all(a <= 0) and b >= 0:
            continue
        rows.append((a, b, False))
    lam = np.zeros(len(rows))
    z = theta.copy()
    resid = math.inf
    for _ in range(max_sweeps):
        biggest = 0.0
        for k, (a, b, eq) in enumerate(rows):
            base = z + lam[k] * a
            lo, hi = F.shift_interval(base, a)
            new = None
            if not eq:
                if lo < 0 < hi and float(a @ F.grad_conj(base)) <= b:
                    new = 0.0
                else:
                    lo = max(lo, 0.0)
            if new is None:
                new = solve_decreasing(lambda t: float(a @ F.grad_conj(base - t * a)) - b, lo, hi)
            biggest = max(biggest, abs(new - lam[k]) / (1.0 + abs(new)))
            lam[k] = new
            z = base - new * a
        x = F.grad_conj(z)
        resid = cs.max_violation(x)
        if resid <= tol and biggest <= 1e-10:
            return x
    raise ProjectionError("dual coordinate ascent did not converge", resid)


def project_dual(F: LegendreFunction, theta, aset: ActionSet, method: str = "auto") -> np.ndarray:
    """Bregman projection onto Conv(A) of the primal point whose gradient is theta."""
    theta = np.asarray(theta, dtype=float)
    if not F.in_dual(theta):
        raise ProjectionError("dual point outside the dual domain")
    if method == "auto":
        method = "generic"
        if isinstance(aset, (MSet, ParallelGames, Exp2LowerBound)):
            method = "waterfill"
    if method == "generic":
        return dual_coordinate_ascent(F, theta, aset.constraints())
    if isinstance(aset, MSet):
        return capped_simplex(F, theta, aset.m)
    if isinstance(aset, ParallelGames):
        rows = theta.reshape(aset.m, aset.k)
        return np.concatenate([capped_simplex(F, r, 1.0) for r in rows])
    if isinstance(aset, Exp2LowerBound):
        x = np.empty(aset.d)
        x[: aset.half] = capped_simplex(F, theta[: aset.half], aset.q)
        s = _interval_pair(F, theta, aset.first_interval, aset.second_interval)
        x[aset.first_interval] = s
        x[aset.second_interval] = 1.0 - s
        return x
    raise ValueError(f"no water-filling solver for {aset.kind}")


def bregman_project(F: LegendreFunction, w, aset: ActionSet, method: str = "auto") -> np.ndarray:
    """argmin over Conv(A) of D_F(x, w), for w in the open domain of F."""
    return project_dual(F, F.grad(w), aset, method)


def pythagorean_gaps(F: LegendreFunction, w, x, aset: ActionSet) -> np.ndarray:
    """D_F(a, w) - D_F(a, x) - D_F(x, w) for every vertex a; nonnegative at the projection."""
    dxw = bregman(F, x, w)
    return np.array([bregman(F, a, w) - bregman(F, a, x) - dxw for a in aset.vertices().astype(float)])

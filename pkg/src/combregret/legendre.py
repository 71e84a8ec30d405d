"""Separable Legendre functions, their duals and Bregman divergences.

Two families are provided: the negative entropy and the functions
``F_psi(x) = sum_i int_0^{x_i} psi^{-1}(s) ds`` built from the power potential
``psi(u) = (-u)^{-q}``, q > 1 (the INF family).  Both are separable, so every
map acts coordinatewise, but the interface takes and returns full vectors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy


class DomainError(ValueError):
    """A point lies outside the (primal or dual) domain of a Legendre function."""


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "power"  # "power" for (-u)^{-q}, "exp" for the exponential
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in ("power", "exp"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "power" and not self.q > 1:
            raise ValueError(f"power potential needs q > 1, got q={self.q}")


class LegendreFunction:
    """Common interface; subclasses implement the scalar maps on numpy arrays."""

    name = "legendre"
    # the dual domain is (-inf, dual_sup)^d
    dual_sup = math.inf

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def grad_conj(self, u) -> np.ndarray:
        """Inverse gradient, mapping the dual space back to the primal domain."""
        raise NotImplementedError

    def conj(self, u) -> float:
        raise NotImplementedError

    def psi_prime(self, u) -> np.ndarray:
        """Derivative of the potential, i.e. the (diagonal) Hessian of F*."""
        raise NotImplementedError

    # -- domain checks -------------------------------------------------------
    def _interior(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(x > 0) or not np.all(np.isfinite(x)):
            raise DomainError(f"{self.name}: point not in the open domain (0, inf)^d")
        return x

    def _closure(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(x >= 0) or not np.all(np.isfinite(x)):
            raise DomainError(f"{self.name}: point not in the closed domain [0, inf)^d")
        return x

    def _dual(self, u):
        u = np.asarray(u, dtype=float)
        if not np.all(u < self.dual_sup) or np.any(np.isnan(u)):
            raise DomainError(f"{self.name}: point not in the dual domain")
        return u

    def in_dual(self, u) -> bool:
        return bool(np.all(np.asarray(u) < self.dual_sup))

    def shift_interval(self, u, a):
        """Range of t for which ``u - t*a`` stays in the dual domain."""
        if math.isinf(self.dual_sup):
            return -math.inf, math.inf
        u, a = np.asarray(u, dtype=float), np.asarray(a, dtype=float)
        gap = u - self.dual_sup  # < 0
        pos, neg = a > 0, a < 0
        lo = float(np.max(gap[pos] / a[pos])) if pos.any() else -math.inf
        hi = float(np.min(gap[neg] / a[neg])) if neg.any() else math.inf
        return lo, hi

    def solve_shift(self, u, total: float) -> float:
        """Find t with ``sum_i grad_conj(u - t)_i = total``.

        The left side is strictly decreasing in t.  Subclasses override this
        with faster solvers.
        """
        u = np.asarray(u, dtype=float)
        lo, hi = self.shift_interval(u, np.ones_like(u))
        return solve_decreasing(lambda t: float(np.sum(self.grad_conj(u - t))) - total, lo, hi)


def solve_decreasing(f, lo=-math.inf, hi=math.inf, xtol=1e-14):
    """Root of a continuous decreasing f on the open interval (lo, hi).

    f must change sign inside the interval; a bracket is grown outward toward
    infinite ends and inward toward finite ones before handing over to brentq.
    """
    if math.isinf(lo) and math.isinf(hi):
        a, b = -1.0, 1.0
    elif math.isinf(lo):
        a, b = hi - 1.0, hi - 0.5
    elif math.isinf(hi):
        a, b = lo + 0.5, lo + 1.0
    else:
        a, b = lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo)
    step = 1.0
    for _ in range(2000):
        if f(a) > 0:
            break
        if math.isinf(lo):
            a -= step
            step *= 2.0
        else:
            a = lo + 0.5 * (a - lo)
    else:
        raise ArithmeticError("could not bracket root from below")
    step = 1.0
    for _ in range(2000):
        if f(b) <= 0:
            break
        if math.isinf(hi):
            b += step
            step *= 2.0
        else:
            b = hi - 0.5 * (hi - b)
    else:
        raise ArithmeticError("could not bracket root from above")
    if f(b) == 0:
        return b
    return brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


class NegEntropy(LegendreFunction):
    """F(x) = sum x log x - sum x on (0, inf)^d, with 0 log 0 = 0 on the boundary."""

    name = "negentropy"

    def __init__(self, d: int | None = None):
        self.d = d

    def value(self, x):
        x = self._closure(x)
        return float(np.sum(xlogy(x, x) - x))

    def grad(self, x):
        return np.log(self._interior(x))

    def grad_conj(self, u):
        return np.exp(self._dual(u))

    def conj(self, u):
        return float(np.sum(np.exp(self._dual(u))))

    def psi_prime(self, u):
        return np.exp(self._dual(u))

    def solve_shift(self, u, total):
        u = np.asarray(u, dtype=float)
        top = np.max(u)
        return float(top + math.log(np.sum(np.exp(u - top))) - math.log(total))

    def __repr__(self):
        return "negentropy"


class PowerPotential(LegendreFunction):
    """F(x) = -(q/(q-1)) sum x^{1-1/q}, the Legendre function of psi(u) = (-u)^{-q}.

    The dual domain is (-inf, 0)^d and grad_conj(u) = (-u)^{-q}.
    """

    name = "inf"
    dual_sup = 0.0

    def __init__(self, q: float = 2.0, d: int | None = None):
        if not q > 1:
            raise ValueError(f"q must exceed 1, got {q}")
        self.q = float(q)
        self.d = d

    def value(self, x):
        x = self._closure(x)
        q = self.q
        return float(-(q / (q - 1.0)) * np.sum(x ** (1.0 - 1.0 / q)))

    def grad(self, x):
        return -self._interior(x) ** (-1.0 / self.q)

    def grad_conj(self, u):
        return (-self._dual(u)) ** (-self.q)

    def conj(self, u):
        q = self.q
        return float(np.sum((-self._dual(u)) ** (1.0 - q)) / (q - 1.0))

    def psi_prime(self, u):
        return self.q * (-self._dual(u)) ** (-self.q - 1.0)

    def solve_shift(self, u, total):
        # g(t) = sum (t - u_i)^{-q} decreases for t > max(u).  h = g^{-1/q} is a
        # negative-order power mean of (t - u), hence concave and increasing,
        # and exactly linear when one term dominates; Newton on h from the left
        # of the root climbs monotonically and converges quadratically.
        u = np.asarray(u, dtype=float)
        q = self.q
        target = total ** (-1.0 / q)
        t = float(np.max(u)) + target
        for _ in range(100):
            gap = t - u
            vals = gap ** (-q)
            g = float(np.sum(vals))
            if g - total <= 1e-14 * total:
                break
            h = g ** (-1.0 / q)
            slope = h / g * float(np.sum(vals / gap))
            step = (target - h) / slope
            if step <= 1e-16 * max(1.0, abs(t)):
                break
            t += step
        return t

    def __repr__(self):
        return f"inf:q={self.q:g}"


def negentropy(d: int | None = None) -> NegEntropy:
    if d is not None and d < 1:
        raise ValueError("d must be at least 1")
    return NegEntropy(d)


def potential_legendre(spec: PotentialSpec, d: int | None = None) -> LegendreFunction:
    """Legendre function F_psi for a potential with omega = 0."""
    if spec.kind == "exp":
        return NegEntropy(d)
    return PowerPotential(spec.q, d)


def parse_legendre(text: str) -> LegendreFunction:
    """``negentropy`` or ``inf:q=<float>`` (``inf`` alone means q=2)."""
    text = text.strip().lower()
    if text in ("negentropy", "entropy", "exp"):
        return NegEntropy()
    m = re.fullmatch(r"inf(?::q=([0-9.eE+-]+))?", text)
    if m:
        return PowerPotential(float(m.group(1)) if m.group(1) else 2.0)
    raise ValueError(f"unknown Legendre function {text!r}")


def bregman(F: LegendreFunction, x, y) -> float:
    """D_F(x, y) = F(x) - F(y) - (x - y) . grad F(y), for x in closure(D), y in D."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = F.grad(y)
    return float(F.value(x) - F.value(y) - np.dot(x - y, g))


def dual_bregman(F: LegendreFunction, u, v) -> float:
    """D_{F*}(u, v) computed from the conjugate F*."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(F.conj(u) - F.conj(v) - np.dot(u - v, F.grad_conj(v)))


def theta(x):
    """exp(x) - 1 - x, accurate near zero."""
    x = np.asarray(x, dtype=float)
    return np.expm1(x) - x


def negentropy_dual_bregman(u, v) -> float:
    """Closed form sum_i exp(v_i) * theta(u_i - v_i) of the negentropy dual divergence."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.sum(np.exp(v) * theta(u - v)))


def psi_quadratic_bound(spec: PotentialSpec, u, v):
    """Return (D_{F*}(u, v), 0.5 * sum psi'(v_i) (u_i - v_i)^2) for u <= v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u > v):
        raise ValueError("the quadratic bound needs u <= v coordinatewise")
    F = potential_legendre(spec)
    lhs = dual_bregman(F, u, v)
    rhs = 0.5 * float(np.sum(F.psi_prime(v) * (u - v) ** 2))
    return lhs, rhs

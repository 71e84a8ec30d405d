"""Online stochastic mirror descent over Conv(A).

Each round: write x_t as a vertex distribution and sample from it, estimate
the loss vector, take the gradient step in the dual space, and Bregman-project
back onto Conv(A).
"""

from __future__ import annotations

import math

import numpy as np

from .action_sets import ActionSet
from .decomposition import VertexDistribution, decompose, sample_vertex
from .environments import Feedback
from .legendre import LegendreFunction, NegEntropy, PowerPotential
from .projection import ProjectionError, bregman_project, project_dual

__all__ = [
    "OSMD", "osmd_init", "estimate_semi_bandit", "dual_step", "bregman_project",
    "decompose", "osmd_round", "tuned_eta", "regret_bound", "initial_point",
]

DEFAULT_FLOOR = 1e-12


class ConsistencyError(ArithmeticError):
    """The dual step left the dual domain of F."""


def initial_point(aset: ActionSet, F: LegendreFunction) -> np.ndarray:
    """argmin of F over Conv(A).

    Every point of Conv(A) has coordinate sum m, so on Conv(A) the divergence
    D_F(x, 1) differs from F(x) by an affine function of sum(x), i.e. by a
    constant for both families here; projecting the all-ones point therefore
    minimises F itself.
    """
    return bregman_project(F, np.ones(aset.d), aset)


def estimate_semi_bandit(x, a, observed) -> np.ndarray:
    """z_hat(i) = z(i) a(i) / x(i): importance weighting by the marginal of coordinate i."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a)
    observed = np.asarray(observed, dtype=float)
    played = a == 1
    if np.any(x[played] < 1e-10):
        raise ValueError("played coordinate has marginal below 1e-10")
    est = np.zeros_like(x)
    est[played] = observed[played] / x[played]
    return est


class OSMD:
    """Mutable player state for one game."""

    def __init__(self, aset: ActionSet, F: LegendreFunction, eta: float,
                 feedback: str = "semi", floor: float = DEFAULT_FLOOR, method: str = "auto"):
        if not eta > 0:
            raise ValueError(f"learning rate must be positive, got {eta}")
        if feedback not in ("full", "semi"):
            raise ValueError(f"OSMD supports full or semi feedback, not {feedback!r}")
        self.aset = aset
        self.F = F
        self.eta = float(eta)
        self.feedback = feedback
        self.floor = floor
        self.method = method
        self.x = initial_point(aset, F)
        self.t = 1
        self.clamped = 0

    def distribution(self) -> VertexDistribution:
        return decompose(self.aset, self.x)

    def sample(self, rng) -> np.ndarray:
        return sample_vertex(self.aset, self.x, rng)

    def estimate(self, a, fb: Feedback) -> np.ndarray:
        if fb.mode == "full":
            if self.feedback != "full":
                raise ValueError("full feedback given to a semi-bandit player")
            return np.asarray(fb.payload, dtype=float)
        if fb.mode == "semi":
            return estimate_semi_bandit(self.x, a, fb.payload)
        raise ValueError(f"OSMD cannot use {fb.mode!r} feedback")

    def dual_point(self, z_hat) -> np.ndarray:
        z_hat = np.asarray(z_hat, dtype=float)
        if np.any(z_hat < 0):
            raise ConsistencyError("loss estimate has a negative coordinate")
        u = self.F.grad(self.x) - self.eta * z_hat
        if not self.F.in_dual(u):
            raise ConsistencyError("dual step left the dual domain")
        return u

    def step(self, z_hat) -> np.ndarray:
        """Gradient step in the dual followed by projection; returns the new x."""
        x = project_dual(self.F, self.dual_point(z_hat), self.aset, self.method)
        if np.min(x) < self.floor:
            self.clamped += 1
            x = bregman_project(self.F, np.maximum(x, self.floor), self.aset, self.method)
        self.x = x
        self.t += 1
        return x

    def update(self, a, fb: Feedback) -> np.ndarray:
        return self.step(self.estimate(a, fb))


def osmd_init(aset: ActionSet, F: LegendreFunction, eta: float, feedback: str = "semi", **kw) -> OSMD:
    return OSMD(aset, F, eta, feedback, **kw)


def dual_step(state: OSMD, z_hat) -> np.ndarray:
    """The unprojected point w with grad F(w) = grad F(x_t) - eta z_hat."""
    return state.F.grad_conj(state.dual_point(z_hat))


def osmd_round(state: OSMD, observe, rng):
    """Play one round; ``observe(a)`` returns the Feedback for the sampled action."""
    a = state.sample(rng)
    state.update(a, observe(a))
    return a, state


def _check(theorem, m, d, n, q):
    if theorem not in ("T3", "T5"):
        raise ValueError(f"theorem must be T3 or T5, got {theorem!r}")
    if not (1 <= m <= d) or n < 0:
        raise ValueError(f"need 1 <= m <= d and n >= 0, got m={m}, d={d}, n={n}")
    if theorem == "T3" and d == m:
        raise ValueError("the negentropy tuning needs d > m (log(d/m) = 0)")
    if theorem == "T5" and not q > 1:
        raise ValueError(f"q must exceed 1, got {q}")


def tuned_eta(theorem: str, m: int, d: int, n: int, q: float = 2.0) -> float:
    """Learning rate that balances the two terms of the semi-bandit regret bound."""
    _check(theorem, m, d, n, q)
    if n < 1:
        raise ValueError("tuning needs n >= 1")
    if theorem == "T3":
        return math.sqrt(2.0 * m * math.log(d / m) / (n * d))
    return math.sqrt(2.0 / (q - 1.0) * (m / d) ** (1.0 - 2.0 / q) / n)


def regret_bound(theorem: str, m: int, d: int, n: int, q: float = 2.0) -> float:
    _check(theorem, m, d, n, q)
    if theorem == "T3":
        return math.sqrt(2.0 * m * d * n * math.log(d / m))
    return q * math.sqrt(2.0 / (q - 1.0) * m * d * n)


def theorem_for(F: LegendreFunction):
    """(theorem, q) whose tuning applies to F."""
    if isinstance(F, NegEntropy):
        return "T3", 2.0
    if isinstance(F, PowerPotential):
        return "T5", F.q
    raise ValueError(f"no tuned rate for {F!r}")

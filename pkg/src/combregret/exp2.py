"""Exponential weights over the explicit vertex list of A.

Weights live in the log domain and are shifted by their maximum after every
update.  In bandit mode the sampling distribution is mixed with the uniform
distribution on A and the loss estimate uses the pseudoinverse of the second
moment matrix under that mixture.
"""

from __future__ import annotations

import math

import numpy as np

from .action_sets import ActionSet
from .environments import Feedback

PINV_CUTOFF = 1e-10


class Exp2:
    def __init__(self, aset: ActionSet, eta: float, gamma: float = 0.0, feedback: str = "full"):
        if not eta > 0:
            raise ValueError(f"learning rate must be positive, got {eta}")
        if feedback not in ("full", "semi", "bandit"):
            raise ValueError(f"unknown feedback mode {feedback!r}")
        if feedback == "bandit":
            if not 0 < gamma <= 1:
                raise ValueError("bandit mode needs an exploration mix gamma in (0, 1]")
        elif gamma != 0:
            raise ValueError("exploration mixing is only used in bandit mode")
        self.aset = aset
        self.V = aset.vertices().astype(float)
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.feedback = feedback
        self.logw = np.zeros(len(self.V))
        self.t = 1
        self._pinv = None

    @property
    def p(self) -> np.ndarray:
        w = np.exp(self.logw - self.logw.max())
        return w / w.sum()

    def sampling_probs(self) -> np.ndarray:
        p = self.p
        if self.gamma:
            p = (1.0 - self.gamma) * p + self.gamma / len(p)
        return p

    def sample_index(self, rng) -> int:
        cdf = np.cumsum(self.sampling_probs())
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return min(i, len(cdf) - 1)

    def sample(self, rng) -> np.ndarray:
        return self.aset.vertices()[self.sample_index(rng)].copy()

    def coordinate_probs(self) -> np.ndarray:
        """P(a(i) = 1) under p_t."""
        return self.p @ self.V

    def second_moment_pinv(self) -> np.ndarray:
        if self._pinv is None:
            q = self.sampling_probs()
            P = (self.V * q[:, None]).T @ self.V
            vals, vecs = np.linalg.eigh(P)
            keep = vals > PINV_CUTOFF * vals.max()
            pinv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
            if np.max(np.abs(P @ pinv @ P - P)) > 1e-8 * max(1.0, vals.max()):
                raise np.linalg.LinAlgError("pseudoinverse residual above tolerance")
            self._pinv = pinv
        return self._pinv

    def estimate(self, a, fb: Feedback) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if fb.mode != self.feedback:
            raise ValueError(f"player expects {self.feedback!r} feedback, got {fb.mode!r}")
        if fb.mode == "full":
            return np.asarray(fb.payload, dtype=float)
        if fb.mode == "semi":
            marg = self.coordinate_probs()
            played = a == 1
            if np.any(marg[played] < 1e-12):
                raise ValueError("played coordinate has probability below 1e-12")
            est = np.zeros_like(a)
            est[played] = np.asarray(fb.payload, dtype=float)[played] / marg[played]
            return est
        return self.second_moment_pinv() @ a * float(fb.payload)

    def step(self, z_hat) -> None:
        z_hat = np.asarray(z_hat, dtype=float)
        if not np.all(np.isfinite(z_hat)):
            raise ValueError("loss estimate must be finite")
        with np.errstate(over="ignore", invalid="ignore"):
            logw = self.logw - self.eta * (self.V @ z_hat)
            logw -= logw.max()
        if not np.all(np.isfinite(logw)) or not math.isfinite(np.exp(logw).sum()):
            raise OverflowError("weights overflowed; eta * |z_hat| too large")
        self.logw = logw
        self._pinv = None
        self.t += 1

    def update(self, a, fb: Feedback) -> None:
        self.step(self.estimate(a, fb))


def exp2_sample(state: Exp2, rng) -> np.ndarray:
    return state.sample(rng)


def exp2_estimate(state: Exp2, a, fb: Feedback) -> np.ndarray:
    return state.estimate(a, fb)


def exp2_update(state: Exp2, z_hat) -> Exp2:
    state.step(z_hat)
    return state


def exp2_auto_eta(aset: ActionSet, n: int) -> float:
    """Hedge tuning for per-round losses in [0, m]: sqrt(8 log|A| / n) / m."""
    return math.sqrt(8.0 * math.log(max(aset.size(), 2)) / n) / aset.m

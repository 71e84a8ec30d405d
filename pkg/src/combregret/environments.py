"""Loss generators and the feedback channel.

Adversaries produce z_t in [0, 1]^d.  Oblivious ones ignore the history;
stochastic ones draw from the environment generator handed to them by the
harness, and expose their mean loss vector for pseudo-regret accounting.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .action_sets import ActionSet, ParallelGames

MODES = ("full", "semi", "bandit")


@dataclass(frozen=True)
class Feedback:
    mode: str
    payload: object  # full vector, masked vector, or scalar


def observe(mode: str, a, z) -> Feedback:
    a = np.asarray(a)
    z = np.asarray(z, dtype=float)
    if mode == "full":
        return Feedback(mode, z.copy())
    if mode == "semi":
        return Feedback(mode, a * z)
    if mode == "bandit":
        return Feedback(mode, float(a @ z))
    raise ValueError(f"unknown feedback mode {mode!r}")


class Adversary:
    kind = "adversary"
    oblivious = True
    stochastic = False

    def __init__(self, d: int):
        self.d = d

    def loss(self, t: int, rng=None, history=None) -> np.ndarray:
        """Loss vector for round t (1-based).  history holds past (action, z) pairs."""
        raise NotImplementedError

    def mean(self) -> np.ndarray:
        raise TypeError(f"{self.kind} has no known mean loss")

    def descriptor(self) -> str:
        return self.kind


class FixedSequence(Adversary):
    kind = "file"

    def __init__(self, losses, path=None):
        losses = np.atleast_2d(np.asarray(losses, dtype=float))
        if losses.min() < 0 or losses.max() > 1:
            raise ValueError("losses must lie in [0, 1]")
        super().__init__(losses.shape[1])
        self.losses = losses
        self.path = path

    def loss(self, t, rng=None, history=None):
        if t > len(self.losses):
            raise IndexError(f"sequence has {len(self.losses)} rounds, asked for round {t}")
        return self.losses[t - 1].copy()

    def descriptor(self):
        return f"file:{self.path}" if self.path else f"fixed:n={len(self.losses)}"


class AlternatingLB(Adversary):
    """Zero on the first half; charges the first interval on odd rounds, the second on even."""

    kind = "alternating"

    def __init__(self, d):
        if d < 4 or d % 4:
            raise ValueError(f"alternating adversary needs d a multiple of 4, got {d}")
        super().__init__(d)
        h, q = d // 2, d // 4
        self._odd = np.zeros(d)
        self._odd[h:h + q] = 1.0
        self._even = np.zeros(d)
        self._even[h + q:] = 1.0

    def loss(self, t, rng=None, history=None):
        return (self._odd if t % 2 else self._even).copy()


class EpsilonSkewLB(Adversary):
    """Constant loss: 1 - eps on the first quarter, 1 on the second, 0 elsewhere."""

    kind = "epsskew"

    def __init__(self, d, eps):
        if d < 4 or d % 4:
            raise ValueError(f"epsilon-skew adversary needs d a multiple of 4, got {d}")
        if not 0 < eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {eps}")
        super().__init__(d)
        self.eps = float(eps)
        q = d // 4
        self._z = np.zeros(d)
        self._z[:q] = 1.0 - eps
        self._z[q:2 * q] = 1.0

    def loss(self, t, rng=None, history=None):
        return self._z.copy()

    def descriptor(self):
        return f"epsskew:eps={self.eps:g}"


class AlphaStochastic(Adversary):
    """Independent Bernoulli(1/2 - eps * alpha(i, j)) losses on a parallel-games set."""

    kind = "alpha"
    stochastic = True

    def __init__(self, aset: ActionSet, alpha, eps):
        if not isinstance(aset, ParallelGames):
            raise TypeError("the alpha adversary is defined on parallel-games sets")
        if not 0 <= eps < 0.5:
            raise ValueError(f"eps must lie in [0, 1/2), got {eps}")
        alpha = np.asarray(alpha)
        if not aset.is_vertex(alpha):
            raise ValueError("alpha must be an action of the set")
        super().__init__(aset.d)
        self.alpha = alpha.astype(np.int8)
        self.eps = float(eps)
        self.aset = aset
        self._p = 0.5 - self.eps * self.alpha

    def loss(self, t, rng=None, history=None):
        return (rng.random(self.d) < self._p).astype(float)

    def mean(self):
        return self._p.copy()

    def descriptor(self):
        return f"alpha:eps={self.eps:g},alpha={self.aset.index_of(self.alpha)}"


class IIDUniform(Adversary):
    """Each coordinate uniform on [0, 1], independently across rounds."""

    kind = "iid"
    stochastic = True

    def loss(self, t, rng=None, history=None):
        return rng.random(self.d)

    def mean(self):
        return np.full(self.d, 0.5)


def alternating_adversary(d) -> AlternatingLB:
    return AlternatingLB(d)


def epsilon_skew_adversary(d, eps) -> EpsilonSkewLB:
    return EpsilonSkewLB(d, eps)


def alpha_adversary(aset, alpha, eps) -> AlphaStochastic:
    return AlphaStochastic(aset, alpha, eps)


def build_adversary(spec: str, aset: ActionSet) -> Adversary:
    """Parse ``alternating``, ``epsskew:eps=0.1``, ``alpha:eps=0.1,alpha=<index>``,
    ``iid`` or ``file:<csv>``."""
    kind, _, rest = spec.strip().partition(":")
    kind = kind.lower()
    if kind == "file":
        path = Path(rest)
        losses = np.loadtxt(path, delimiter=",", ndmin=2)
        adv = FixedSequence(losses, path=str(path))
        if adv.d != aset.d:
            raise ValueError(f"loss file has {adv.d} columns, set has d={aset.d}")
        return adv
    params = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        params[k.strip()] = v.strip()
    if kind == "alternating":
        return AlternatingLB(aset.d)
    if kind == "epsskew":
        return EpsilonSkewLB(aset.d, float(params.get("eps", 0.1)))
    if kind == "iid":
        return IIDUniform(aset.d)
    if kind == "alpha":
        idx = int(params.get("alpha", 0))
        return AlphaStochastic(aset, aset.vertices()[idx], float(params.get("eps", 0.1)))
    raise ValueError(f"unknown adversary {spec!r}")

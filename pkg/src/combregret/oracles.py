"""Independent ground truth: exact enumeration, grid search and closed forms.

Nothing here calls the OSMD or Exp2 update rules.  The estimator oracle
reuses the production estimators on purpose, since what it checks is their
expectation under exact enumeration of the sampling distribution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .action_sets import ActionSet
from .decomposition import decompose
from .environments import observe
from .legendre import LegendreFunction, NegEntropy


class OracleError(ValueError):
    pass


# -- estimators --------------------------------------------------------------

def exact_estimator_mean(aset: ActionSet, z, mode: str, *, x=None, p=None, gamma: float = 0.0) -> np.ndarray:
    """sum_a p(a) z_hat(a), enumerating every action the player can draw.

    Give ``x`` for the OSMD estimator (p is then the decomposition of x) or
    ``p`` over ``aset.vertices()`` for the Exp2 estimators.
    """
    from .exp2 import Exp2
    from .osmd import estimate_semi_bandit

    z = np.asarray(z, dtype=float)
    if (x is None) == (p is None):
        raise OracleError("give exactly one of x or p")
    if x is not None:
        dist = decompose(aset, x)
        total = np.zeros(aset.d)
        for a, w in zip(dist.atoms, dist.probs):
            fb = observe(mode, a, z)
            if mode == "full":
                est = fb.payload
            elif mode == "semi":
                est = estimate_semi_bandit(x, a, fb.payload)
            else:
                raise OracleError("the OSMD estimator has no bandit form")
            total += w * est
        return total
    V = aset.vertices()
    p = np.asarray(p, dtype=float)
    if p.shape != (len(V),):
        raise OracleError(f"p has {p.size} entries for {len(V)} actions")
    with np.errstate(divide="ignore"):
        logw = np.log(p)
    player = Exp2(aset, eta=1.0, gamma=gamma, feedback=mode)
    player.logw = logw
    probs = player.sampling_probs()
    total = np.zeros(aset.d)
    for a, w in zip(V, probs):
        if w > 0:
            total += w * player.estimate(a, observe(mode, a, z))
    return total


# -- projection --------------------------------------------------------------

def _divergence_rows(F: LegendreFunction, X, w):
    """D_F(x, w) for each row x of X, from the scalar potential directly."""
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    if isinstance(F, NegEntropy):
        with np.errstate(divide="ignore", invalid="ignore"):
            xlx = np.where(X > 0, X * np.log(np.where(X > 0, X, 1.0) / w), 0.0)
        return np.sum(xlx - X + w, axis=1)
    q = F.q
    c = q / (q - 1.0)
    f = lambda v: -c * v ** (1.0 - 1.0 / q)
    grad_w = -w ** (-1.0 / q)
    return np.sum(f(X) - f(w) - (X - w) * grad_w, axis=1)


def brute_force_projection(F: LegendreFunction, w, aset: ActionSet, resolution: float = 1e-3) -> np.ndarray:
    """Grid argmin of D_F(., w) over Conv(A) for d <= 3.

    The first d - 1 coordinates are searched on a grid that is refined around
    the incumbent until its spacing is below resolution / 4; the last
    coordinate follows from sum(x) = m.
    """
    d, m = aset.d, aset.m
    if d > 3:
        raise OracleError(f"grid search is limited to d <= 3, got d={d}")
    w = np.asarray(w, dtype=float)
    cs = aset.constraints()
    lo = np.zeros(d - 1)
    hi = np.ones(d - 1)
    step = 0.01
    best = None
    while True:
        axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
        grid = np.array(list(itertools.product(*axes))).reshape(-1, d - 1)
        X = np.column_stack([grid, m - grid.sum(axis=1)])
        feas = np.all(X @ cs.A_ub.T <= cs.b_ub + 1e-12, axis=1)
        X = X[feas]
        if len(X) == 0:
            raise OracleError("grid missed the feasible set")
        best = X[int(np.argmin(_divergence_rows(F, X, w)))]
        if step <= resolution / 4:
            return best
        lo = np.clip(best[:-1] - 2 * step, 0.0, 1.0)
        hi = np.clip(best[:-1] + 2 * step, 0.0, 1.0)
        step /= 10


# -- lower-bound closed forms --------------------------------------------------

def _check_quarter(d):
    if d < 4 or d % 4:
        raise OracleError(f"d must be a positive multiple of 4, got {d}")


def exp2_alternating_regret(d: int, n: int, eta: float) -> float:
    """Expected regret of full-information Exp2 against the alternating adversary.

    Each pair of rounds costs (d/8) tanh(eta d / 8) relative to any fixed action.
    """
    _check_quarter(d)
    if n < 0 or n % 2:
        raise OracleError(f"n must be even and nonnegative, got {n}")
    if eta < 0:
        raise OracleError("eta must be nonnegative")
    return n * d / 16.0 * math.tanh(eta * d / 8.0)


def _log_binomial_sq(k):
    i = np.arange(k + 1)
    return i, 2.0 * (gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1))


def _skew_ratio(k, log_c):
    """sum (1 - i/k) C(k,i)^2 c^i / sum C(k,i)^2 c^i, from log c."""
    i, lb = _log_binomial_sq(k)
    logw = lb + i * log_c
    return float(np.exp(logsumexp(logw, b=1.0 - i / k) - logsumexp(logw)))


def exp2_epsskew_regret(d: int, n: int, eta: float, eps: float) -> float:
    """The closed-form ratio (n eps d / 4) * R(d/4, exp(eta n eps)).

    R is evaluated with the final-round weights, so this is a lower bound on
    the expected regret; ``exp2_epsskew_regret_exact`` gives the exact value.
    """
    _check_quarter(d)
    if not 0 < eps <= 1:
        raise OracleError(f"eps must lie in (0, 1], got {eps}")
    if eta < 0 or n < 0:
        raise OracleError("eta and n must be nonnegative")
    return n * eps * d / 4.0 * _skew_ratio(d // 4, eta * n * eps)


def exp2_epsskew_regret_exact(d: int, n: int, eta: float, eps: float) -> float:
    """Expected regret of Exp2 against the epsilon-skew adversary, round by round.

    In round t the weights are exp(-eta (t - 1) (d/4 - i eps)) for an action
    with i coordinates in the cheaper quarter, and such an action pays
    eps (d/4 - i) more than the best one.
    """
    _check_quarter(d)
    if not 0 < eps <= 1:
        raise OracleError(f"eps must lie in (0, 1], got {eps}")
    k = d // 4
    return sum(eps * k * _skew_ratio(k, eta * (t - 1) * eps) for t in range(1, n + 1))


def tech1_ratio(k: int, c, exact: bool = False):
    """sum (1 - i/k) C(k,i)^2 c^i / sum C(k,i)^2 c^i.

    With ``exact=True`` the ratio is a Fraction computed from the exact
    binary value of c.
    """
    if k < 1:
        raise OracleError("k must be at least 1")
    if exact:
        c = Fraction(c)
        num = den = Fraction(0)
        for i in range(k + 1):
            w = math.comb(k, i) ** 2 * c ** i
            num += Fraction(k - i, k) * w
            den += w
        return num / den
    if not c > 0:
        raise OracleError("c must be positive")
    return _skew_ratio(k, math.log(c))


# -- Poisson binomial and KL ---------------------------------------------------

@dataclass(frozen=True)
class DiscreteDistribution:
    pmf: np.ndarray  # probabilities of 0, 1, ..., K

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.pmf))

    def mean(self) -> float:
        return float(self.support @ self.pmf)

    def kl(self, other: "DiscreteDistribution") -> float:
        """KL(self, other) in nats."""
        if len(self.pmf) != len(other.pmf):
            raise OracleError("distributions have different supports")
        p, q = self.pmf, other.pmf
        live = p > 0
        if np.any(q[live] <= 0):
            raise OracleError("KL is infinite: second argument vanishes where the first does not")
        return float(np.sum(p[live] * np.log(p[live] / q[live])))


def poisson_binomial(params) -> DiscreteDistribution:
    """Law of a sum of independent Bernoullis, by iterated convolution."""
    pmf = np.ones(1)
    for p in params:
        if not 0 < p < 1:
            raise OracleError(f"Bernoulli mean {p} outside (0, 1)")
        pmf = np.convolve(pmf, [1.0 - p, p])
    return DiscreteDistribution(pmf)


def kl_bound_check(p, p_prime, q, n, ell, tail=0.5):
    """(exact KL, bound) for sums of n + 1 Bernoullis differing in one mean.

    B has means p, q (ell times), tail (n - ell times); B' replaces p by p'.
    The bound is 2 (p' - p)^2 / ((1 - p') (n + 2) q).
    """
    if not (n >= 1 and n / 2 <= ell <= n):
        raise OracleError(f"need n/2 <= ell <= n, got n={n}, ell={ell}")
    if q != p and q != p_prime:
        raise OracleError("q must equal p or p'")
    for v in (p, p_prime, q, tail):
        if not 0 < v < 1:
            raise OracleError(f"parameter {v} outside (0, 1)")
    rest = [q] * ell + [tail] * (n - ell)
    kl = poisson_binomial([p] + rest).kl(poisson_binomial([p_prime] + rest))
    bound = 2.0 * (p_prime - p) ** 2 / ((1.0 - p_prime) * (n + 2) * q)
    return kl, bound


def log_quadratic_bound(x, x0):
    """(-log x, -(x - 1) + (x - 1)^2 / (2 x0)), valid for x >= x0 with x0 in (0, 1)."""
    if not 0 < x0 < 1:
        raise OracleError(f"x0 must lie in (0, 1), got {x0}")
    if x < x0:
        raise OracleError(f"need x >= x0, got x={x}, x0={x0}")
    return -math.log(x), -(x - 1.0) + (x - 1.0) ** 2 / (2.0 * x0)


def minimax_reference(m: int, d: int, n: int) -> float:
    """0.02 m sqrt(d n): the bandit minimax lower bound level."""
    if not (m >= 1 and n >= d >= 2 * m):
        raise OracleError(f"need n >= d >= 2m, got m={m}, d={d}, n={n}")
    return 0.02 * m * math.sqrt(d * n)


def lower_bound_envelope(d: int, n: int, eta: float) -> float:
    """Larger of the two Exp2 lower-bound regrets, epsilon tuned as min(log 2 / (eta n), 1)."""
    eps = min(math.log(2.0) / (eta * n), 1.0)
    return max(exp2_alternating_regret(d, n, eta), exp2_epsskew_regret(d, n, eta, eps))

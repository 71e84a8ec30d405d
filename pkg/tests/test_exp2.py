import math

import numpy as np
import pytest

from combregret.action_sets import Exp2LowerBound, MSet, ParallelGames
from combregret.environments import Feedback, observe
from combregret.exp2 import Exp2, exp2_auto_eta, exp2_estimate, exp2_sample, exp2_update
from combregret.oracles import exact_estimator_mean


def test_initial_distribution_uniform():
    p = Exp2(MSet(4, 2), 0.1)
    np.testing.assert_allclose(p.p, np.full(6, 1 / 6))


def test_update_example():
    p = exp2_update(Exp2(MSet(2, 1), 1.0), [1.0, 0.0])
    np.testing.assert_allclose(p.p, [0.268941, 0.731059], atol=1e-6)
    assert p.p[0] == pytest.approx(math.exp(-1) / (math.exp(-1) + 1), rel=1e-14)


def test_zero_estimate_leaves_p():
    p = Exp2(MSet(4, 2), 0.5)
    p.step(np.array([0.3, 0.1, 0.0, 0.9]))
    before = p.p.copy()
    p.step(np.zeros(4))
    np.testing.assert_array_equal(p.p, before)


def test_shift_invariance():
    rng = np.random.default_rng(0)
    a, b = Exp2(MSet(5, 2), 0.7), Exp2(MSet(5, 2), 0.7)
    for _ in range(10):
        z = rng.random(5)
        a.step(z)
        b.step(z + rng.normal() * 3)
        np.testing.assert_allclose(a.p, b.p, rtol=1e-12)


def test_log_domain_matches_direct_weights():
    rng = np.random.default_rng(1)
    aset = ParallelGames(6, 2)
    p = Exp2(aset, 0.3)
    V = aset.vertices().astype(float)
    w = np.ones(len(V))
    for _ in range(40):
        z = rng.random(6)
        p.step(z)
        w = w * np.exp(-0.3 * V @ z)
        np.testing.assert_allclose(p.p, w / w.sum(), rtol=1e-12)
        assert p.p.sum() == pytest.approx(1.0, abs=1e-12)


def test_permutation_equivariance():
    # swapping the two games of a parallel-games set permutes the actions
    aset = ParallelGames(4, 2)
    perm = np.array([2, 3, 0, 1])
    V = aset.vertices()
    action_perm = np.array([aset.index_of(v[perm]) for v in V])
    rng = np.random.default_rng(2)
    a, b = Exp2(aset, 0.4), Exp2(aset, 0.4)
    for _ in range(10):
        z = rng.random(4)
        a.step(z)
        b.step(z[perm])
    np.testing.assert_allclose(b.p[action_perm], a.p, rtol=1e-12)


def test_semi_estimate_example():
    p = Exp2(MSet(3, 1), 1.0, feedback="semi")
    a = np.array([1, 0, 0])
    est = exp2_estimate(p, a, observe("semi", a, [0.6, 0.2, 0.9]))
    np.testing.assert_allclose(est, [1.8, 0.0, 0.0])


def test_bandit_estimate_example():
    p = Exp2(MSet(2, 1), 1.0, gamma=0.5, feedback="bandit")
    a = np.array([1, 0])
    est = exp2_estimate(p, a, observe("bandit", a, [0.5, 0.3]))
    np.testing.assert_allclose(est, [1.0, 0.0])
    np.testing.assert_allclose(exact_estimator_mean(MSet(2, 1), [0.5, 0.3], "bandit", p=np.array([0.5, 0.5]), gamma=0.5),
                               [0.5, 0.3])


def test_full_estimate_is_z():
    p = Exp2(MSet(3, 1), 1.0)
    z = np.array([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(p.estimate([1, 0, 0], observe("full", [1, 0, 0], z)), z)


@pytest.mark.parametrize("aset", [MSet(6, 2), ParallelGames(6, 2), Exp2LowerBound(8)], ids=repr)
def test_semi_estimator_exactly_unbiased(aset):
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = rng.dirichlet(np.ones(aset.size()))
        z = rng.random(aset.d)
        np.testing.assert_allclose(exact_estimator_mean(aset, z, "semi", p=p), z, atol=1e-12)


@pytest.mark.parametrize("aset", [MSet(4, 1), MSet(5, 2), ParallelGames(4, 2), Exp2LowerBound(8)], ids=repr)
def test_bandit_estimator_unbiased_on_span(aset):
    rng = np.random.default_rng(4)
    for gamma in (0.05, 0.2, 1.0):
        player = Exp2(aset, 1.0, gamma=gamma, feedback="bandit")
        player.logw = np.log(rng.dirichlet(np.ones(aset.size())))
        V = aset.vertices().astype(float)
        q = player.sampling_probs()
        P = (V * q[:, None]).T @ V
        pinv = player.second_moment_pinv()
        z = rng.random(aset.d)
        z_span = P @ pinv @ z  # component of z in the span of P
        mean = exact_estimator_mean(aset, z_span, "bandit", p=player.p, gamma=gamma)
        np.testing.assert_allclose(mean, z_span, atol=1e-9)


def test_sampling_frequencies():
    p = Exp2(MSet(2, 1), 1.0)
    p.step([1.0, 0.0])
    rng = np.random.default_rng(5)
    N = 1_000_000
    u = rng.random(N)
    # vectorised replica of sample_index: same inverse-CDF rule
    cdf = np.cumsum(p.sampling_probs())
    hits = np.searchsorted(cdf, u * cdf[-1], side="right")
    freq = np.mean(hits == 0)
    assert abs(freq - p.p[0]) <= 3 * math.sqrt(p.p[0] * p.p[1] / N)
    draws = np.array([exp2_sample(p, rng)[0] for _ in range(20_000)])
    assert abs(draws.mean() - p.p[0]) <= 4 * math.sqrt(p.p[0] * p.p[1] / 20_000)


def test_gamma_one_is_uniform():
    p = Exp2(MSet(3, 1), 5.0, gamma=1.0, feedback="bandit")
    p.step([1.0, 0.0, 0.0])
    np.testing.assert_allclose(p.sampling_probs(), np.full(3, 1 / 3))


def test_gamma_rules():
    with pytest.raises(ValueError):
        Exp2(MSet(3, 1), 1.0, feedback="bandit")
    with pytest.raises(ValueError):
        Exp2(MSet(3, 1), 1.0, gamma=0.1, feedback="semi")
    with pytest.raises(ValueError):
        Exp2(MSet(3, 1), -1.0)
    with pytest.raises(ValueError):
        Exp2(MSet(3, 1), 1.0, feedback="shouting")


def test_errors():
    p = Exp2(MSet(2, 1), 1.0, feedback="semi")
    p.logw = np.array([0.0, -40.0])
    a = np.array([0, 1])
    with pytest.raises(ValueError):
        p.estimate(a, observe("semi", a, [0.0, 1.0]))
    with pytest.raises(ValueError):
        p.estimate(a, Feedback("full", np.ones(2)))
    with pytest.raises(ValueError):
        p.step([np.inf, 0.0])
    with pytest.raises(OverflowError):
        Exp2(MSet(2, 1), 1e300).step([1e300, 0.0])


def test_auto_eta():
    aset = MSet(4, 2)
    assert exp2_auto_eta(aset, 100) == pytest.approx(math.sqrt(8 * math.log(6) / 100) / 2)

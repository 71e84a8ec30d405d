import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from combregret.action_sets import Exp2LowerBound, MSet
from combregret.checks import CHECKS, alternating_monte_carlo, run_checks
from combregret.environments import EpsilonSkewLB
from combregret.exp2 import Exp2
from combregret.harness import pseudo_regret, run_game
from combregret.legendre import PowerPotential, negentropy
from combregret.oracles import (
    DiscreteDistribution, OracleError, brute_force_projection, exact_estimator_mean, exp2_alternating_regret,
    exp2_epsskew_regret, exp2_epsskew_regret_exact, kl_bound_check, log_quadratic_bound,
    lower_bound_envelope, minimax_reference, poisson_binomial, tech1_ratio,
)
from combregret.projection import bregman_project


def test_estimator_mean_modes():
    z = np.array([0.2, 0.7, 0.4, 0.1])
    aset = MSet(4, 2)
    np.testing.assert_allclose(exact_estimator_mean(aset, z, "semi", x=np.full(4, 0.5)), z, atol=1e-15)
    np.testing.assert_array_equal(exact_estimator_mean(aset, z, "full", x=np.full(4, 0.5)), z)
    np.testing.assert_allclose(exact_estimator_mean(aset, z, "full", p=np.full(6, 1 / 6)), z)
    with pytest.raises(OracleError):
        exact_estimator_mean(aset, z, "semi")
    with pytest.raises(OracleError):
        exact_estimator_mean(aset, z, "bandit", x=np.full(4, 0.5))
    with pytest.raises(OracleError):
        exact_estimator_mean(aset, z, "semi", p=np.full(5, 0.2))


def test_bandit_uniform_two_arms():
    got = exact_estimator_mean(MSet(2, 1), [0.5, 0.3], "bandit", p=np.array([0.5, 0.5]), gamma=0.2)
    np.testing.assert_allclose(got, [0.5, 0.3], atol=1e-12)


def test_bandit_full_rank_is_unbiased():
    rng = np.random.default_rng(0)
    aset = MSet(4, 1)
    for _ in range(10):
        z = rng.random(4)
        p = rng.dirichlet(np.ones(4))
        np.testing.assert_allclose(exact_estimator_mean(aset, z, "bandit", p=p, gamma=0.2), z, atol=1e-12)


def test_brute_force_examples():
    F = negentropy()
    np.testing.assert_allclose(brute_force_projection(F, [1.0, 3.0], MSet(2, 1), 1e-4), [0.25, 0.75], atol=1e-4)
    w = np.array([0.3, 0.7])
    np.testing.assert_allclose(brute_force_projection(F, w, MSet(2, 1)), w, atol=1e-3)
    G = PowerPotential(2.0)
    w = np.array([4.0, 1.0])
    np.testing.assert_allclose(brute_force_projection(G, w, MSet(2, 1)), bregman_project(G, w, MSet(2, 1)), atol=1e-3)
    with pytest.raises(OracleError):
        brute_force_projection(F, np.ones(4), MSet(4, 2))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.01, 5.0), min_size=3, max_size=3), st.sampled_from([1.5, 2.0, 3.0]))
def test_brute_force_agrees_with_solver(w, q):
    w = np.array(w)
    aset = MSet(3, 2)
    for F in (negentropy(), PowerPotential(q)):
        np.testing.assert_allclose(brute_force_projection(F, w, aset), bregman_project(F, w, aset), atol=1e-3)


def test_alternating_examples():
    assert exp2_alternating_regret(4, 2, 2.0) == pytest.approx(0.380797, abs=1e-6)
    assert exp2_alternating_regret(4, 10, 0.0) == 0.0
    assert exp2_alternating_regret(8, 100, 1.0) == pytest.approx(38.0797, abs=1e-4)
    for bad in ((6, 2, 1.0), (4, 3, 1.0), (4, 2, -1.0)):
        with pytest.raises(OracleError):
            exp2_alternating_regret(*bad)


@pytest.mark.parametrize("eta", [0.1, 1.0])
def test_alternating_monte_carlo(eta):
    mean, se, exact = alternating_monte_carlo(eta)
    assert abs(mean - exact) <= 3 * se


def test_epsskew_small_case():
    # d=4: one action per value of i; hand-evaluated sums
    assert exp2_epsskew_regret_exact(4, 2, 1.0, 0.1) == pytest.approx(0.0975020813, abs=1e-10)
    assert exp2_epsskew_regret(4, 2, 1.0, 0.1) == pytest.approx(0.0900332005, abs=1e-10)


def test_epsskew_exact_matches_simulation():
    aset = Exp2LowerBound(4)
    adv = EpsilonSkewLB(4, 0.1)
    traces = [run_game(Exp2(aset, 1.0), adv, aset, 2, s) for s in range(20_000)]
    rep = pseudo_regret(traces, aset, adv)
    assert abs(rep.mean - exp2_epsskew_regret_exact(4, 2, 1.0, 0.1)) <= 3 * rep.stderr


@pytest.mark.parametrize("d", [4, 8])
@pytest.mark.parametrize("eta", [0.01, 0.1, 1.0, 10.0, 100.0])
def test_epsskew_tuned_lower_bound(d, eta):
    n = 100
    eps = min(math.log(2) / (eta * n), 1.0)
    assert exp2_epsskew_regret(d, n, eta, eps) >= min(d * math.log(2) / (12 * eta), n * d / 12) - 1e-12


@pytest.mark.parametrize("eta", [1.0, 10.0])
def test_epsskew_large_eta_dominant_term(eta):
    # for large c the i = k - 1 term dominates the numerator: ratio ~ k / c
    d, n, eps = 64, 100, 0.5
    k = d // 4
    val = exp2_epsskew_regret(d, n, eta, eps)
    assert math.isfinite(val) and val > 0
    log_expected = math.log(n * eps * k * k) - eta * n * eps
    assert math.log(val) == pytest.approx(log_expected, abs=1e-6)


def test_epsskew_huge_eta_underflows_cleanly():
    assert exp2_epsskew_regret(64, 100, 1e4, 0.5) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([4, 8, 16]), st.integers(1, 60), st.floats(0.0, 5.0), st.floats(0.01, 1.0))
def test_epsskew_closed_form_below_exact(d, n, eta, eps):
    assert exp2_epsskew_regret(d, n, eta, eps) <= exp2_epsskew_regret_exact(d, n, eta, eps) + 1e-9


def test_tech1_examples():
    assert tech1_ratio(1, 2, exact=True) == Fraction(1, 3)
    assert tech1_ratio(2, 1) == pytest.approx(0.5, abs=1e-15)
    assert tech1_ratio(2, 1, exact=True) == Fraction(1, 2)
    assert tech1_ratio(1, 2) == pytest.approx(1 / 3, abs=1e-15)


def test_tech1_grid():
    cs = np.round(np.arange(1.0, 2.0001, 0.1), 10)
    assert min(tech1_ratio(k, c) for k in range(1, 201) for c in cs) >= 1 / 3 - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.floats(1.0, 2.0))
def test_tech1_float_matches_exact(k, c):
    assert tech1_ratio(k, c) == pytest.approx(float(tech1_ratio(k, c, exact=True)), rel=1e-12)


def test_poisson_binomial_examples():
    np.testing.assert_allclose(poisson_binomial([0.5, 0.5]).pmf, [0.25, 0.5, 0.25])
    np.testing.assert_allclose(poisson_binomial([0.3]).pmf, [0.7, 0.3])
    pb = poisson_binomial([0.6, 0.5, 0.5])
    np.testing.assert_allclose(pb.pmf, [0.1, 0.35, 0.4, 0.15], atol=1e-15)
    assert pb.mean() == pytest.approx(1.6)
    with pytest.raises(OracleError):
        poisson_binomial([0.0, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=40))
def test_poisson_binomial_sums_to_one(ps):
    pb = poisson_binomial(ps)
    assert abs(pb.pmf.sum() - 1) <= 1e-12
    assert pb.mean() == pytest.approx(sum(ps), abs=1e-9)


def test_kl_examples():
    kl, bound = kl_bound_check(0.5, 0.5, 0.5, 4, 3)
    assert kl == 0.0 and bound == 0.0
    kl, bound = kl_bound_check(0.5, 0.6, 0.5, 2, 1)
    assert bound == pytest.approx(0.025)
    assert kl == pytest.approx(0.0067731307, abs=1e-10)
    with pytest.raises(OracleError):
        kl_bound_check(0.5, 0.6, 0.5, 4, 1)
    with pytest.raises(OracleError):
        kl_bound_check(0.5, 0.6, 0.4, 4, 3)


def test_kl_grid_has_no_violations():
    grid = (0.3, 0.4, 0.5, 0.6, 0.7)
    for p in grid:
        for pp in grid:
            for n in range(2, 13):
                for ell in range(math.ceil(n / 2), n + 1):
                    for q in (p, pp):
                        kl, bound = kl_bound_check(p, pp, q, n, ell)
                        assert kl <= bound


def test_kl_rejects_vanishing_second_argument():
    with pytest.raises(OracleError):
        DiscreteDistribution(np.array([0.5, 0.5])).kl(DiscreteDistribution(np.array([1.0, 0.0])))


def test_log_quadratic_examples():
    assert log_quadratic_bound(1.0, 0.5) == (0.0, 0.0)
    lhs, rhs = log_quadratic_bound(0.5, 0.5)
    assert lhs == pytest.approx(math.log(2)) and rhs == pytest.approx(0.75)
    with pytest.raises(OracleError):
        log_quadratic_bound(0.2, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 20.0))
def test_log_quadratic_sweep(x0, extra):
    lhs, rhs = log_quadratic_bound(x0 + extra, x0)
    assert lhs <= rhs + 1e-12


def test_minimax_reference_examples():
    assert minimax_reference(1, 4, 100) == pytest.approx(0.4)
    assert minimax_reference(2, 4, 4) == pytest.approx(0.16)
    with pytest.raises(OracleError):
        minimax_reference(3, 4, 100)


def test_lower_bound_envelope_grid():
    d, n = 8, 64
    target = min(0.04 * n * d, 0.01 * d ** 1.5 * math.sqrt(n))
    for eta in np.logspace(-4, 2, 20):
        assert lower_bound_envelope(d, n, float(eta)) >= target


def test_every_registered_check_passes():
    fast = [name for name in CHECKS if name != "exp2_alternating"]
    results = run_checks(fast)
    assert [r[0] for r in results] == fast
    assert all(ok for _, ok, _ in results), results
    with pytest.raises(KeyError):
        run_checks(["nonsense"])

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_dataset
from prowl.certify import (
    CompositeUtilitySpec, NuisancePair, PropensityError, composite_certificate, gamma_arm,
    gamma_scores, ipw_value_hat, lower_reward, value_hat, worst_case_weights,
)
from prowl.data import Dataset, FeatureKind, Observation, PolicyParams
from prowl.reduction import reduction_residuals
from prowl.simulate import ScenarioConfig, simulate


def const_nu(pos, neg):
    """Nuisance with constant predictions on identity features [1]."""
    return NuisancePair([pos], [neg])


ONE = np.array([1.0])


class TestLowerReward:
    def test_examples(self):
        assert lower_reward(0.8, 0.3) == pytest.approx(0.5)
        assert lower_reward(0.2, 0.5) == 0.0
        assert lower_reward(0.37, 0.0) == 0.37

    def test_range_error(self):
        with pytest.raises(ValueError):
            lower_reward(1.2, 0.1)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_domination(self, r, u):
        assert 0.0 <= lower_reward(r, u) <= r


class TestComposite:
    def test_worked_example(self):
        spec = CompositeUtilitySpec((0.60, 0.25, 0.15), (0.10, 0.05, 0.05), 1.0)
        r, under, u = composite_certificate((0, 1, 1), spec)
        assert (r, under, u) == pytest.approx((0.40, 0.30, 0.10), abs=1e-12)

    def test_constant_outcome(self):
        spec = CompositeUtilitySpec((0.5, 0.3, 0.2), (0.2, 0.2, 0.2), 1.0)
        assert composite_certificate((1, 1, 1), spec) == pytest.approx((1.0, 1.0, 0.0))

    def test_rho_zero(self, rng):
        spec = CompositeUtilitySpec((0.5, 0.3, 0.2), (0.2, 0.2, 0.2), 0.0)
        for _ in range(20):
            g = rng.integers(0, 2, size=3)
            r, under, u = composite_certificate(g, spec)
            assert under == pytest.approx(r) and u == pytest.approx(0.0)

    def test_infeasible(self):
        with pytest.raises(ValueError):
            CompositeUtilitySpec((0.5, 0.5), (0.1,), 1.0)
        with pytest.raises(ValueError):
            CompositeUtilitySpec((0.6, 0.6), (0.0, 0.0), 1.0)

    def test_dimension_mismatch(self):
        spec = CompositeUtilitySpec((0.5, 0.5), (0.1, 0.1), 1.0)
        with pytest.raises(ValueError):
            composite_certificate((1, 0, 1), spec)

    def test_weights_feasible(self, rng):
        for _ in range(50):
            w0 = rng.dirichlet(np.ones(4))
            spec = CompositeUtilitySpec(tuple(w0), tuple(rng.uniform(0, 0.3, 4)), rng.uniform(0, 2))
            w = worst_case_weights(rng.uniform(0, 1, 4), spec)
            lo, hi = spec.bounds()
            assert w.sum() == pytest.approx(1.0)
            assert np.all(w >= lo - 1e-12) and np.all(w <= hi + 1e-12)


class TestGamma:
    def test_hand_value(self):
        obs = Observation((0.0,), 1, 0.8, 0.0, 0.5)
        assert gamma_arm(obs, 1, 0.5, const_nu(0.5, 0.0), ONE) == pytest.approx(1.1)

    def test_off_arm(self):
        obs = Observation((0.0,), -1, 0.8, 0.0, 0.5)
        assert gamma_arm(obs, 1, 0.5, const_nu(0.4, 0.0), ONE) == pytest.approx(0.4)

    def test_zero_nuisance_is_ipw(self):
        obs = Observation((0.0,), 1, 0.6, 0.0, 0.5)
        assert gamma_arm(obs, 1, 0.5, const_nu(0.0, 0.0), ONE) == pytest.approx(1.2)

    def test_overlap_violation(self):
        obs = Observation((0.0,), 1, 0.6, 0.0, 0.05)
        with pytest.raises(PropensityError):
            gamma_arm(obs, 1, 0.05, const_nu(0, 0), ONE, epsilon=0.1)

    def test_nuisance_clipped(self):
        nu = NuisancePair([2.0], [-3.0])
        pos, neg = nu.predict(np.ones((1, 1)))
        assert pos[0] == 1.0 and neg[0] == 0.0

    @settings(max_examples=300)
    @given(st.floats(0.01, 0.5), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
           st.sampled_from([-1, 1]), st.sampled_from([-1, 1]), st.floats(0, 1))
    def test_range(self, eps, r, u, nu_val, a, arm, t):
        pi_arm = eps + t * (1 - 2 * eps)
        obs = Observation((0.0,), a, r, u, pi_arm if a == arm else 1 - pi_arm)
        g = gamma_arm(obs, arm, pi_arm, const_nu(nu_val, nu_val), ONE)
        assert 1 - 1 / eps - 1e-12 <= g <= 1 / eps + 1e-12

    def test_range_bulk(self, rng):
        n = 100_000
        eps = 0.05
        p = rng.uniform(eps, 1 - eps, n)
        a = rng.choice([-1, 1], n)
        rl = rng.uniform(0, 1, n)
        nu_p, nu_n = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
        g_pos = nu_p + (a == 1) / p * (rl - nu_p)
        g_neg = nu_n + (a == -1) / (1 - p) * (rl - nu_n)
        for g in (g_pos, g_neg):
            assert g.min() >= 1 - 1 / eps - 1e-12 and g.max() <= 1 / eps + 1e-12


class TestValueEstimators:
    def single(self, a, r, pi):
        return Dataset(np.zeros((1, 1)), [a], [r], [0.0], [pi], feature_kind=FeatureKind.IDENTITY)

    def test_single_observation(self):
        ds = self.single(1, 0.6, 0.5)
        assert value_hat(ds, np.array([1]), NuisancePair.zero(1)) == pytest.approx(1.2)

    def test_opposite_arm(self, rng):
        ds = random_dataset(rng)
        assert value_hat(ds, -ds.a, NuisancePair.zero(3)) == 0.0
        assert ipw_value_hat(ds, -ds.a) == 0.0

    def test_zero_rewards(self, rng):
        ds = random_dataset(rng)
        ds0 = Dataset(ds.x, ds.a, np.zeros(ds.n), ds.u, ds.pi_a)
        assert ipw_value_hat(ds0, ds0.a) == 0.0

    def test_zero_nuisance_matches_ipw(self, rng):
        ds = random_dataset(rng, n=200)
        pol = PolicyParams.for_dataset([0.3, -0.7, 0.1], ds)
        assert value_hat(ds, pol, NuisancePair.zero(3)) == pytest.approx(ipw_value_hat(ds, pol, "certified"), abs=1e-14)

    def test_certified_below_proxy(self, rng):
        for _ in range(20):
            ds = random_dataset(rng, n=100)
            d = rng.choice([-1, 1], ds.n)
            assert ipw_value_hat(ds, d, "certified") <= ipw_value_hat(ds, d, "proxy") + 1e-15

    def test_feature_mismatch(self, rng):
        ds = random_dataset(rng)
        with pytest.raises(ValueError):
            value_hat(ds, PolicyParams.for_dataset([1.0, 0.0], ds), NuisancePair.zero(3))

    def test_matches_reduction_terms(self, rng):
        ds = random_dataset(rng, n=300)
        nu = NuisancePair(rng.normal(size=3) * 0.3, rng.normal(size=3) * 0.3)
        d = rng.choice([-1, 1], ds.n)
        g_pos, g_neg = gamma_scores(ds, nu)
        terms = np.where(d == 1, g_pos, g_neg) - reduction_residuals(g_pos, g_neg, d)
        assert abs(value_hat(ds, d, nu) - terms.mean()) <= 1e-12


def test_x_only_certificate_penalty_is_policy_free():
    """IPW penalty mean of u 1{a=d}/pi is the same for two policies (Scenario 1, rho=1)."""
    pen = {1: [], -1: []}
    for seed in range(200):
        train, _ = simulate(ScenarioConfig(1, 500, 1.0, seed, n_test=1), with_lower=False)
        for arm in (1, -1):
            pen[arm].append(np.mean(train.u * (train.a == arm) / train.pi_a))
    diff = np.array(pen[1]) - np.array(pen[-1])
    assert abs(diff.mean()) <= 3 * diff.std(ddof=1) / np.sqrt(diff.size)

import json

import numpy as np
import pytest

from conftest import random_dataset
from prowl.certify import NuisancePair
from prowl.data import Dataset, FeatureKind, PolicyParams, sign_rule
from prowl.learners import (
    Candidate, LearnerConfig, build_library, deploy, fit_nuisance, fit_ridge_arm, fold_ids,
    hinge_map, hinge_objective, library_size, owl_fit, prowl_fit, qlearn_fit, ridge_solve, rwl_fit,
    surrogate_log_density, weighted_hinge_fit,
)
from prowl.learners.baselines import owl_weights, rwl_weights
from prowl.learners.hinge import map_penalty
from prowl.learners.pipeline import FitResult, stratified_halves
from prowl.pacbayes import BoundConfig, PosteriorLibrary, catoni_lcb, discrete_kl


class TestRidge:
    def test_intercept_only_constant(self):
        F = np.ones((7, 1))
        assert ridge_solve(F, np.full(7, 0.37), 5.0, free=(-1,))[0] == pytest.approx(0.37)

    def test_shrinkage_limit(self, rng):
        F = np.column_stack([rng.normal(size=50), np.ones(50)])
        coef = ridge_solve(F, rng.normal(size=50), 1e12)
        assert abs(coef[0]) <= 1e-6

    def test_duplicate_rows(self, rng):
        F = np.column_stack([rng.normal(size=(30, 2)), np.ones(30)])
        y = rng.normal(size=30)
        a = ridge_solve(F, y, 0.1)
        b = ridge_solve(np.vstack([F, F]), np.concatenate([y, y]), 0.1)
        assert np.allclose(a, b, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            ridge_solve(np.zeros((0, 2)), np.zeros(0), 1.0)
        with pytest.raises(ValueError):
            ridge_solve(np.ones((3, 1)), np.ones(3), 0.0)

    def test_empty_arm(self):
        ds = Dataset(np.zeros((3, 1)), [1, 1, 1], [0.1, 0.2, 0.3], [0, 0, 0], [0.5] * 3)
        with pytest.raises(ValueError):
            fit_ridge_arm(ds, -1, 1e-6)

    def test_treatment_free_target(self, rng):
        ds = random_dataset(rng)
        coef = fit_ridge_arm(ds, None, 1e-6, "residual-treatment-free")
        assert np.allclose(coef, ridge_solve(ds.features, ds.r_lower, 1e-6))


class TestHinge:
    def test_zero_weights(self, rng):
        F = rng.normal(size=(10, 3))
        assert np.array_equal(weighted_hinge_fit(F, np.ones(10), np.zeros(10), 0.1), np.zeros(3))

    def test_single_point(self):
        beta = weighted_hinge_fit(np.ones((1, 1)), np.ones(1), np.ones(1), 1e-8, intercept_last=False)
        assert max(1 - beta[0], 0.0) <= 0.05

    def test_label_flip(self, rng):
        F = np.column_stack([rng.normal(size=(40, 2)), np.ones(40)])
        y = np.where(rng.uniform(size=40) < 0.5, 1.0, -1.0)
        w = rng.uniform(0.1, 1, 40)
        b1 = weighted_hinge_fit(F, y, w, 1e-6)
        b2 = weighted_hinge_fit(F, -y, w, 1e-6)
        assert np.allclose(b1, -b2)

    def test_deterministic(self, rng):
        F = rng.normal(size=(30, 3))
        y = np.sign(rng.normal(size=30))
        w = rng.uniform(size=30)
        assert np.array_equal(weighted_hinge_fit(F, y, w, 0.01), weighted_hinge_fit(F, y, w, 0.01))

    def test_hinge_map_clamped(self, s1_small):
        train, _ = s1_small
        nu = fit_nuisance(train)
        beta = hinge_map(train, nu, 1.0, 0.02, score_bound=0.5)
        assert np.max(np.abs(train.features @ beta)) <= 0.5 + 1e-12

    def test_map_objective_identity(self, rng):
        F = np.column_stack([rng.normal(size=(60, 2)), np.ones(60)])
        y = np.sign(rng.normal(size=60))
        w = rng.uniform(size=60)
        lam, lam0, n = 2.0, 0.02, 60
        pen = map_penalty(lam, lam0, n)
        for _ in range(100):
            b1, b2 = rng.normal(size=3), rng.normal(size=3)
            d_obj = (hinge_objective(b1, F, y, w, pen) - hinge_objective(b2, F, y, w, pen)) * lam * n
            d_log = surrogate_log_density(b1, F, y, w, lam, lam0) - surrogate_log_density(b2, F, y, w, lam, lam0)
            assert abs(d_obj + d_log) <= 1e-9


class TestBaselines:
    def test_owl_zero_rewards(self, rng):
        ds = random_dataset(rng)
        ds0 = Dataset(ds.x, ds.a, np.zeros(ds.n), ds.u, ds.pi_a)
        assert np.array_equal(owl_fit(ds0).beta, np.zeros(3))

    def test_owl_families_coincide_without_certificate(self, s1_small):
        ds = s1_small[0].without_certificate()
        assert np.array_equal(owl_fit(ds, reward_field="proxy").beta, owl_fit(ds, reward_field="certified").beta)

    def test_folds_deterministic(self):
        a, b = fold_ids(23, 5, 7), fold_ids(23, 5, 7)
        assert np.array_equal(a, b) and sorted(np.bincount(a)) == [4, 4, 5, 5, 5]

    def test_rwl_zero_residual(self):
        x = np.linspace(-1, 1, 20)[:, None]
        ds = Dataset(x, np.where(np.arange(20) % 2, 1, -1), np.full(20, 0.4), np.zeros(20), np.full(20, 0.5))
        assert np.allclose(rwl_fit(ds).beta, 0.0)

    def test_rwl_reduces_to_owl(self, rng):
        ds = random_dataset(rng)
        y1, w1 = rwl_weights(ds, "certified", np.zeros(ds.n))
        y2, w2 = owl_weights(ds, "certified")
        assert np.array_equal(y1, y2) and np.array_equal(w1, w2)

    def test_rwl_deterministic(self, s1_small):
        assert np.array_equal(rwl_fit(s1_small[0], seed=3).beta, rwl_fit(s1_small[0], seed=3).beta)

    def test_qlearn_no_effect(self, rng):
        n = 5000
        x = rng.uniform(-1, 1, size=(n, 1))
        a = rng.choice([-1, 1], n)
        r = np.clip(0.5 + 0.2 * x[:, 0] + rng.uniform(-0.2, 0.2, n), 0, 1)
        ds = Dataset(x, a, r, np.zeros(n), np.full(n, 0.5))
        psi = qlearn_fit(ds).beta
        # Standard errors from the OLS fit of the interaction block.
        F = ds.features
        Z = np.hstack([F, a[:, None] * F])
        resid = r - Z @ np.linalg.lstsq(Z, r, rcond=None)[0]
        cov = np.linalg.inv(Z.T @ Z) * resid.var()
        se = np.sqrt(np.diag(cov))[F.shape[1]:]
        assert np.all(np.abs(psi) <= 3 * se)

    def test_qlearn_recovers_sign(self, rng):
        n = 2000
        x = rng.uniform(-1, 1, size=(n, 1))
        a = rng.choice([-1, 1], n)
        r = np.clip(0.5 + 0.3 * a * x[:, 0] + rng.uniform(-0.1, 0.1, n), 0, 1)
        ds = Dataset(x, a, r, np.zeros(n), np.full(n, 0.5))
        pol = qlearn_fit(ds)
        xt = rng.uniform(-1, 1, size=(4000, 1))
        test = Dataset(xt, np.ones(4000), np.zeros(4000), np.zeros(4000), np.full(4000, 0.5),
                       standardization=ds.standardization)
        assert np.mean(pol.decide(test) == sign_rule(xt[:, 0])) >= 0.95


class TestLibrary:
    def test_size_and_provenance(self, s1_small):
        cfg = LearnerConfig()
        lib = build_library(s1_small[0], cfg, BoundConfig(), seed=1)
        assert len(lib.candidates) == library_size(cfg) == lib.metadata["size"] == 117
        assert lib.metadata["counts"]["prior-particle"] == 32
        assert lib.metadata["counts"]["perturbation"] == 4 * 17
        assert lib.prior.sum() == pytest.approx(1.0)

    def test_deterministic(self, s1_small):
        a = build_library(s1_small[0], seed=4)
        b = build_library(s1_small[0], seed=4)
        assert np.array_equal(a.v_hat, b.v_hat)
        assert all(np.array_equal(x.beta, y.beta) for x, y in zip(a.candidates, b.candidates))

    def test_value_range(self, s2_small):
        cfg = BoundConfig(epsilon=0.01)
        lib = build_library(s2_small[0], bound_cfg=cfg, seed=0)
        lo, hi = cfg.gamma_range
        assert np.all(lib.v_hat >= lo) and np.all(lib.v_hat <= hi)

    def test_bad_provenance(self):
        with pytest.raises(ValueError):
            Candidate(np.zeros(2), NuisancePair.zero(2), "mystery")


class TestPipeline:
    def test_lcb_self_consistent(self, s1_small):
        fit = prowl_fit(s1_small[0], seed=0)
        assert fit.lcb_star == pytest.approx(fit.recompute_lcb(), abs=1e-12)
        cfg = fit.bound_config
        l_hat = (cfg.c_eps - float(fit.posterior @ fit.library.v_hat)) / cfg.k_eps
        kl = discrete_kl(fit.posterior, fit.library.prior)
        assert fit.lcb_star == pytest.approx(catoni_lcb(kl, l_hat, fit.n, fit.gamma_star, cfg))

    def test_u_zero_ablation_is_same_path(self, s1_small):
        ds = s1_small[0]
        zero_u = Dataset(ds.x, ds.a, ds.r, np.zeros(ds.n), ds.pi_a, standardization=ds.standardization)
        a = prowl_fit(ds.without_certificate(), seed=2)
        b = prowl_fit(zero_u, seed=2)
        assert np.array_equal(a.posterior, b.posterior) and a.lcb_star == b.lcb_star

    def test_rho_zero_pipelines_coincide(self):
        from prowl.simulate import ScenarioConfig, simulate
        train, _ = simulate(ScenarioConfig(1, 150, 0.0, 9, n_test=10), with_lower=False)
        a = prowl_fit(train, seed=5)
        b = prowl_fit(train.without_certificate(), seed=5)
        assert np.array_equal(a.posterior, b.posterior) and a.lcb_star == b.lcb_star

    def test_split_and_product_and_family(self, s1_small):
        ds = s1_small[0]
        split = prowl_fit(ds, LearnerConfig(split_free=False), seed=1)
        assert split.n < ds.n and split.metadata["split_free"] is False
        halves = stratified_halves(ds, 1)
        assert np.intersect1d(*halves).size == 0 and halves[0].size + halves[1].size == ds.n
        prod = prowl_fit(ds, seed=1, temperature_mode="product")
        tied = prowl_fit(ds, seed=1)
        assert prod.lcb_star >= tied.lcb_star - 1e-12
        fam = prowl_fit(ds, seed=1, hinge_family=True)
        assert fam.lcb_star >= tied.lcb_star - 1e-12
        with pytest.raises(ValueError):
            prowl_fit(ds, temperature_mode="bogus")

    def test_overlap_enforced(self, s2_small):
        with pytest.raises(ValueError):
            prowl_fit(s2_small[0], bound_cfg=BoundConfig(epsilon=0.2))

    def test_json(self, s1_small, tmp_path):
        fit = prowl_fit(s1_small[0], seed=0)
        doc = json.loads(fit.to_json(tmp_path / "fit.json"))
        assert len(doc["candidates"]) == 117 and doc["lcb"] == fit.lcb_star
        assert doc["metadata"]["library_conditional"] is True


def _fit_with(betas, weights, ds):
    cands = [Candidate(np.asarray(b, float), NuisancePair.zero(len(b)), "prior-particle") for b in betas]
    lib = PosteriorLibrary.uniform(cands, np.zeros(len(cands)))
    q = np.asarray(weights, float)
    return FitResult(lib.with_posterior(q), q, 1.0, 1.0, None, 0.0, ds.n, ds)


class TestDeploy:
    def test_point_mass(self, s1_small):
        ds = s1_small[0]
        fit = _fit_with([[1, 0, 0], [0, 1, 0]], [1.0, 0.0], ds)
        betas = [deploy(fit, m, seed=3).beta for m in ("map", "mean", "gibbs")]
        assert all(np.array_equal(b, betas[0]) for b in betas)

    def test_mean_cancels_to_plus_one(self, s1_small):
        ds = s1_small[0]
        fit = _fit_with([[0.5, -0.2, 0.1], [-0.5, 0.2, -0.1]], [0.5, 0.5], ds)
        pol = deploy(fit, "mean")
        assert np.array_equal(pol.beta, np.zeros(3)) and np.all(pol.decide(ds) == 1)

    def test_map_ties_smallest_index(self, s1_small):
        fit = _fit_with([[1, 0, 0], [0, 1, 0]], [0.5, 0.5], s1_small[0])
        assert np.array_equal(deploy(fit, "map").beta, [1, 0, 0])

    def test_gibbs_seeded(self, s1_small):
        fit = _fit_with([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [0.2, 0.3, 0.5], s1_small[0])
        assert np.array_equal(deploy(fit, "gibbs", seed=11).beta, deploy(fit, "gibbs", seed=11).beta)

    def test_errors(self, s1_small):
        fit = _fit_with([[1, 0, 0]], [1.0], s1_small[0])
        with pytest.raises(ValueError):
            deploy(fit, "median")

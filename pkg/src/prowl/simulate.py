"""Synthetic benchmarks with oracle certificates.

Column 0 of every (n, 2) array refers to arm +1, column 1 to arm -1.

Random-variate order within a sample is fixed: covariates, arm assignment,
target noise (both arms), optimism factors (both arms). Beta factors use the
two-Gamma construction. Each sample draws from its own child of
``SeedSequence(seed)``: [train, test, train oracle, test oracle].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureKind, OracleInfo, PotentialOutcomes, decisions, standardize_fit

INNER_DRAWS = 256


def clip(lo: float, hi: float, t):
    """min(hi, max(lo, t)); elementwise for arrays."""
    if lo > hi:
        raise ValueError("clip needs lo <= hi")
    out = np.minimum(hi, np.maximum(lo, t))
    return float(out) if np.ndim(out) == 0 else out


def _sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


def _pos(t):
    return np.maximum(t, 0.0)


def _beta(rng, a: float, b: float, size):
    ga = rng.gamma(a, size=size)
    gb = rng.gamma(b, size=size)
    return ga / (ga + gb)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int = 1
    n: int = 200
    rho: float = 1.0
    seed: int = 0
    n_test: int = 10_000
    inner_draws: int = INNER_DRAWS

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ValueError("scenario must be 1 or 2")
        if self.n < 1 or self.n_test < 1:
            raise ValueError("sample sizes must be positive")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")


# ---------------------------------------------------------------------------
# Scenario 1: balanced randomization, linear boundary, shared envelope

def s1_main(X):
    return 0.38 * X[:, 0] - 0.22 * X[:, 1]


def s1_effect(X):
    return 0.72 * (X[:, 0] + 0.65 * X[:, 1]) / 1.65


def s1_target_means(X):
    base = 0.5 + 0.15 * s1_main(X)
    tau = 0.15 * s1_effect(X)
    return np.column_stack([clip(0, 1, base + tau), clip(0, 1, base - tau)])


def s1_envelopes(X, rho):
    u0 = 0.02 + 0.04 * ((X[:, 0] > 0) & (X[:, 1] > 0))
    u = np.minimum(rho * u0, 0.10)
    return np.column_stack([u, u])


# ---------------------------------------------------------------------------
# Scenario 2: correlated covariates, localized benefit, arm-specific optimism

def s2_covariates(rng, n):
    X = np.empty((n, 8))
    X[:, :4] = rng.uniform(-1.0, 1.0, size=(n, 4))
    e = rng.standard_normal(size=(n, 4))
    x1, x2, x3, x4 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    X[:, 4] = clip(-1, 1, 0.50 * x1 - 0.22 * x2 + 0.14 * x3 + 0.32 * e[:, 0])
    X[:, 5] = clip(-1, 1, -0.30 * x2 + 0.26 * x3 + 0.18 * X[:, 4] + 0.34 * e[:, 1])
    X[:, 6] = clip(-1, 1, 0.68 * X[:, 4] + 0.40 * X[:, 5] + 0.30 * x1 + 0.28 * e[:, 2])
    X[:, 7] = clip(-1, 1, 0.46 * x3 - 0.28 * x4 + 0.60 * X[:, 6] + 0.18 * X[:, 4] + 0.30 * e[:, 3])
    return X


def _cols(X):
    return [X[:, j] for j in range(8)]


def s2_main(X):
    x1, x2, x3, x4, x5, x6, x7, x8 = _cols(X)
    return clip(-1, 1, 0.20 * np.sin(1.2 * np.pi * x3) + 0.14 * np.cos(0.8 * np.pi * x4)
                + 0.10 * x5 - 0.08 * x6 + 0.06 * x7 * x8)


def s2_effect(X):
    x1, x2, x3, x4, x5, x6, x7, x8 = _cols(X)
    r = 0.90 * x1 - 0.64 * x2 + 0.45 * np.sin(np.pi * x3) + 0.24 * x4
    w = np.exp(-2.9 * (r - 0.02) ** 2)
    b = 0.14 * np.tanh(x3 - 0.85 * x4) - 0.04 * _pos(x5) - 0.03 * _pos(x6)
    return clip(-1, 1, np.tanh(2.05 * (w + b - 0.60)))


def s2_target_means(X):
    base = 0.5 + 0.15 * s2_main(X)
    tau = 0.15 * s2_effect(X)
    return np.column_stack([clip(0, 1, base + tau), clip(0, 1, base - tau)])


def s2_base_envelopes(X):
    x1, x2, x3, x4, x5, x6, x7, x8 = _cols(X)
    r_u = 0.94 * x1 - 0.70 * x2 + 0.48 * np.sin(np.pi * x3) + 0.24 * x4
    h = _sigmoid(2.6 * (r_u - 0.02))
    q = np.exp(-8.6 * (r_u - 0.02) ** 2)
    f = 0.78 * _pos(x5) + 0.58 * _pos(x6)
    o = _sigmoid(2.4 * (1.18 * x7 + 0.60 * x5 - 0.12))
    s = _sigmoid(2.8 * (1.28 * x8 + 0.92 * x3 * x4 + 0.78 * x5 * x7 + 0.48 * x6 * x8 - 0.06))
    t = _sigmoid(2.5 * (1.08 * x7 + 0.96 * x8 + 0.92 * x5 * x7 + 0.70 * x6 * x8 - 0.08))
    c = _sigmoid(1.9 * (0.48 * x6 - 0.52 * x7 - 0.28 * x8 - 0.10))
    u_pos = clip(0, 0.32, 0.010 + 0.020 * h + q * (0.16 * f + 0.17 * s + 0.11 * o + 0.19 * t)
                 + 0.075 * t + 0.022 * f * t)
    u_neg = clip(0, 0.06, 0.002 + 0.006 * h + 0.010 * q * c + 0.004 * c)
    return np.column_stack([u_pos, u_neg])


def s2_envelopes(X, rho):
    return np.minimum(rho * s2_base_envelopes(X), 0.32)


def s2_propensity(X):
    x1, x2, x3, x4, x5, x6, x7, x8 = _cols(X)
    r_pi = 0.84 * x1 - 0.60 * x2 + 0.42 * np.sin(np.pi * x3) + 0.20 * x4
    logit = (0.20 * r_pi + 1.35 * _pos(x5) + 1.10 * _pos(x6) + 1.55 * x7 + 1.25 * x8
             + 1.55 * x5 * x7 + 0.95 * x6 * x8 - 0.40 * x3 * x4)
    return clip(0.01, 0.99, _sigmoid(logit))


# ---------------------------------------------------------------------------
# Scenario dispatch

PROXY_FACTORS = {1: (0.50, 0.50), 2: (0.92, 0.14)}
FEATURE_KINDS = {1: FeatureKind.LINEAR_INTERCEPT, 2: FeatureKind.SCENARIO2_BASIS}
EPSILON = {1: 0.5, 2: 0.01}
ENVELOPE_CAP = {1: 0.10, 2: 0.32}


def covariates(scenario: int, rng, n: int) -> np.ndarray:
    if scenario == 1:
        return rng.uniform(-1.0, 1.0, size=(n, 2))
    return s2_covariates(rng, n)


def propensity_plus(scenario: int, X) -> np.ndarray:
    return np.full(X.shape[0], 0.5) if scenario == 1 else s2_propensity(X)


def target_means(scenario: int, X) -> np.ndarray:
    return s1_target_means(X) if scenario == 1 else s2_target_means(X)


def envelopes(scenario: int, X, rho: float) -> np.ndarray:
    return s1_envelopes(X, rho) if scenario == 1 else s2_envelopes(X, rho)


def proxy_means(scenario: int, mu_star, U) -> np.ndarray:
    fac = np.array(PROXY_FACTORS[scenario])
    return clip(0, 1, mu_star + fac * U)


def noise_scales(scenario: int, U) -> np.ndarray:
    if scenario == 1:
        return np.full_like(U, 0.10)
    return np.column_stack([0.08 + 0.68 * U[:, 0], 0.05 + 0.04 * U[:, 1]])


def optimism_factors(scenario: int, rng, shape) -> np.ndarray:
    """V for both arms; shape is (n, 2) or (n, 2, k)."""
    if scenario == 1:
        return rng.uniform(0.0, 1.0, size=shape)
    pos = _beta(rng, 7.0, 1.0, (shape[0],) + tuple(shape[2:]))
    neg = _beta(rng, 1.08, 5.2, (shape[0],) + tuple(shape[2:]))
    return np.stack([pos, neg], axis=1)


def realize(mu_star, scale, U, eps, V):
    """Target, proxy and certified rewards from noise and optimism draws."""
    r_star = clip(0, 1, mu_star + scale * eps)
    r = clip(0, 1, r_star + U * V)
    return r_star, r, np.maximum(r - U, 0.0)


def sample_arm_rewards(scenario: int, X, rho: float, arm: int, size: int, rng):
    """Draws of (R*, R, R_lower) for one arm at each row of ``X``; shape (n, size)."""
    X = np.atleast_2d(X)
    j = 0 if arm == 1 else 1
    mu = target_means(scenario, X)[:, j:j + 1]
    U = envelopes(scenario, X, rho)
    scale = noise_scales(scenario, U)[:, j:j + 1]
    eps = rng.uniform(-1.0, 1.0, size=(X.shape[0], size))
    V = optimism_factors(scenario, rng, (X.shape[0], 2, size))[:, j, :]
    return realize(mu, scale, U[:, j:j + 1], eps, V)


def certified_means(scenario: int, X, rho: float, rng, inner_draws: int = INNER_DRAWS,
                    chunk: int = 4096) -> np.ndarray:
    """Monte Carlo E[R_lower^a | X = x] with ``inner_draws`` draws per point and arm.

    The analytic mu* serves as a control variate: the estimate is
    mu* + mean(R_lower - R*) over shared draws. The correction is
    nonpositive draw by draw, so the result never exceeds mu*, and it is
    exactly mu* when the envelope vanishes.
    """
    out = np.empty((X.shape[0], 2))
    for start in range(0, X.shape[0], chunk):
        Xc = X[start:start + chunk]
        mu = target_means(scenario, Xc)
        U = envelopes(scenario, Xc, rho)
        scale = noise_scales(scenario, U)
        eps = rng.uniform(-1.0, 1.0, size=(Xc.shape[0], 2, inner_draws))
        V = optimism_factors(scenario, rng, (Xc.shape[0], 2, inner_draws))
        rs, _, rl = realize(mu[:, :, None], scale[:, :, None], U[:, :, None], eps, V)
        out[start:start + chunk] = np.maximum(mu + (rl - rs).mean(axis=2), 0.0)
    return out


def _draw_sample(scenario: int, n: int, rho: float, rng, inner_rng, inner_draws, with_lower):
    X = covariates(scenario, rng, n)
    p_plus = propensity_plus(scenario, X)
    A = np.where(rng.random(n) < p_plus, 1, -1)
    eps = rng.uniform(-1.0, 1.0, size=(n, 2))
    V = optimism_factors(scenario, rng, (n, 2))
    mu_star = target_means(scenario, X)
    U = envelopes(scenario, X, rho)
    r_star, r, _ = realize(mu_star, noise_scales(scenario, U), U, eps, V)
    col = np.where(A == 1, 0, 1)
    rows = np.arange(n)
    oracle = OracleInfo(
        r_star=r_star[rows, col],
        mu_star=mu_star,
        mu_proxy=proxy_means(scenario, mu_star, U),
        mu_lower=certified_means(scenario, X, rho, inner_rng, inner_draws) if with_lower else None,
        pi_plus=p_plus,
    )
    pi_a = np.where(A == 1, p_plus, 1.0 - p_plus)
    return X, A, r[rows, col], U[rows, col], pi_a, oracle, PotentialOutcomes(r, r_star, U)


def simulate(cfg: ScenarioConfig, with_lower: bool = True) -> tuple[Dataset, Dataset]:
    """Policy-learning sample and independent test sample.

    The test sample reuses the learning sample's standardization. With
    ``with_lower=False`` the Monte Carlo certified means are skipped.
    """
    train_ss, test_ss, train_in, test_in = np.random.SeedSequence(cfg.seed).spawn(4)
    kind = FEATURE_KINDS[cfg.scenario]
    parts = _draw_sample(cfg.scenario, cfg.n, cfg.rho, np.random.default_rng(train_ss),
                         np.random.default_rng(train_in), cfg.inner_draws, with_lower)
    std = standardize_fit(parts[0])
    train = Dataset(*parts[:5], feature_kind=kind, standardization=std, oracle=parts[5], potential=parts[6])
    parts = _draw_sample(cfg.scenario, cfg.n_test, cfg.rho, np.random.default_rng(test_ss),
                         np.random.default_rng(test_in), cfg.inner_draws, with_lower)
    test = Dataset(*parts[:5], feature_kind=kind, standardization=std, oracle=parts[5], potential=parts[6])
    return train, test


def scenario1_sample(cfg: ScenarioConfig, with_lower: bool = True) -> tuple[Dataset, Dataset]:
    if cfg.scenario != 1:
        raise ValueError("config is not for scenario 1")
    return simulate(cfg, with_lower)


def scenario2_sample(cfg: ScenarioConfig, with_lower: bool = True) -> tuple[Dataset, Dataset]:
    if cfg.scenario != 2:
        raise ValueError("config is not for scenario 2")
    return simulate(cfg, with_lower)


def oracle_value(policy, test: Dataset, which: str = "target") -> float:
    """Test-sample mean of the chosen arm's oracle conditional mean."""
    orc = test.oracle
    if orc is None:
        raise ValueError("test sample has no oracle fields")
    table = {"target": orc.mu_star, "proxy": orc.mu_proxy, "certified": orc.mu_lower}
    if which not in table:
        raise ValueError(f"unknown oracle surface {which!r}")
    mu = table[which]
    if mu is None:
        raise ValueError(f"oracle surface {which!r} was not computed")
    d = decisions(policy, test)
    return float(np.mean(np.where(d == 1, mu[:, 0], mu[:, 1])))

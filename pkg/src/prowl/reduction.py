"""Exact reduction of certified value maximization to weighted classification.

For a nuisance pair the certified advantage D = Gamma_{+1} - Gamma_{-1} gives a
pseudo-label Y = sgn(D) and a weight W = |D|, and for every rule d

    Gamma_d = C_obs - W * 1{Y != d},   C_obs = (Gamma_{+1} + Gamma_{-1} + W) / 2,

so the empirical certified value equals a policy-free constant minus a
weighted 0-1 risk.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certify import NuisancePair, PropensityError, gamma_arm, gamma_scores
from .data import Dataset, Observation, PolicyParams, decisions, sign_rule


@dataclass(frozen=True)
class AdvantageTriplet:
    d_val: float
    y: int
    w: float


def advantage_triplet(obs: Observation, pi_plus: float, nu: NuisancePair, x_feat,
                      epsilon: float | None = None) -> AdvantageTriplet:
    if not 0.0 < pi_plus < 1.0:
        raise PropensityError(f"pi(+1|x) = {pi_plus} must lie strictly inside (0, 1)")
    if epsilon is not None and min(pi_plus, 1.0 - pi_plus) < epsilon - 1e-15:
        raise PropensityError(f"propensity below overlap floor {epsilon}")
    d_val = (gamma_arm(obs, 1, pi_plus, nu, x_feat)
             - gamma_arm(obs, -1, 1.0 - pi_plus, nu, x_feat))
    return AdvantageTriplet(d_val, sign_rule(d_val), abs(d_val))


def advantage_arrays(ds: Dataset, nu: NuisancePair) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (D, Y, W) over a dataset."""
    g_pos, g_neg = gamma_scores(ds, nu)
    d_val = g_pos - g_neg
    return d_val, sign_rule(d_val), np.abs(d_val)


def weighted01_risk_hat(ds: Dataset, policy, nu: NuisancePair) -> float:
    if isinstance(policy, PolicyParams):
        policy.check_compatible(ds)
    _, y, w = advantage_arrays(ds, nu)
    return float(np.mean(w * (y != decisions(policy, ds))))


def c_sharp_hat(ds: Dataset, nu: NuisancePair) -> float:
    g_pos, g_neg = gamma_scores(ds, nu)
    return float(np.mean(0.5 * (g_pos + g_neg + np.abs(g_pos - g_neg))))


def reduction_residuals(g_pos, g_neg, d) -> np.ndarray:
    """Gamma_d - (C_obs - W 1{Y != d}) elementwise; zero up to rounding."""
    g_pos = np.asarray(g_pos, dtype=float)
    g_neg = np.asarray(g_neg, dtype=float)
    d = np.asarray(d)
    d_val = g_pos - g_neg
    y = sign_rule(d_val)
    w = np.abs(d_val)
    c_obs = 0.5 * (g_pos + g_neg + w)
    gamma_d = np.where(d == 1, g_pos, g_neg)
    return gamma_d - (c_obs - w * (y != d))


def reduction_residual(obs: Observation, policy_arm: int, nu: NuisancePair, x_feat,
                       pi_plus: float | None = None) -> float:
    """Single-observation residual of the exact reduction identity."""
    p = obs.pi_plus if pi_plus is None else pi_plus
    g_pos = gamma_arm(obs, 1, p, nu, x_feat)
    g_neg = gamma_arm(obs, -1, 1.0 - p, nu, x_feat)
    return float(reduction_residuals(g_pos, g_neg, policy_arm))


def conditional_variance_check(arm: int, p_arm: float, mu_arm: float, sigma2_arm: float,
                               nu_arm_value: float) -> float:
    """Closed-form Var(Gamma_a | X = x) for the given conditional moments."""
    if arm not in (-1, 1):
        raise ValueError("arm must be -1 or +1")
    if not 0.0 < p_arm <= 1.0:
        raise ValueError("p_arm must lie in (0, 1]")
    if sigma2_arm < 0:
        raise ValueError("sigma2_arm must be nonnegative")
    return sigma2_arm / p_arm + (1.0 - p_arm) / p_arm * (mu_arm - nu_arm_value) ** 2


def advantage_conditional_variance(p: float, mu_pos: float, mu_neg: float, s2_pos: float,
                                   s2_neg: float, nu_pos: float, nu_neg: float) -> float:
    """Closed-form Var(D | X = x) with p = pi(+1 | x)."""
    q = 1.0 - p
    lin = q * (mu_pos - nu_pos) + p * (mu_neg - nu_neg)
    return s2_pos / p + s2_neg / q + lin ** 2 / (p * q)


def treatment_free_optimum(p: float, mu_pos: float, mu_neg: float) -> float:
    """Variance-minimizing shared nuisance q * mu_{+1} + p * mu_{-1}."""
    return (1.0 - p) * mu_pos + p * mu_neg

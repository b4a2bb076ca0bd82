"""Closed-form ridge regression used for nuisances and Q-learning.

Penalty convention: minimize mean squared error + penalty * ||beta_pen||^2,
where the last (intercept) coordinate is unpenalized. With the per-n scaling
duplicating every row leaves the solution unchanged.
"""
from __future__ import annotations

import numpy as np

from ..certify import NuisancePair
from ..data import Dataset


def ridge_solve(F: np.ndarray, y: np.ndarray, penalty: float, free=(-1,)) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    if F.shape[0] == 0:
        raise ValueError("ridge regression on an empty design")
    if penalty <= 0:
        raise ValueError("ridge penalty must be positive")
    n, p = F.shape
    pen = np.full(p, penalty)
    for j in free:
        pen[j] = 0.0
    A = F.T @ F / n + np.diag(pen)
    b = F.T @ y / n
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, b, rcond=None)[0]


def _has_intercept(ds: Dataset) -> tuple:
    return (-1,) if ds.feature_kind.value != "identity" else ()


def fit_ridge_arm(ds: Dataset, arm: int | None, penalty: float, target: str = "certified") -> np.ndarray:
    """Ridge coefficients for one arm's reward regression.

    ``target`` is "certified", "proxy" or "residual-treatment-free"; the last
    regresses the certified reward on all rows regardless of ``arm``.
    """
    if target == "residual-treatment-free":
        mask = np.ones(ds.n, dtype=bool)
        y = ds.r_lower
    else:
        if arm not in (-1, 1):
            raise ValueError("arm must be -1 or +1")
        mask = ds.a == arm
        y = ds.reward(target)
    if not np.any(mask):
        raise ValueError(f"no observations in arm {arm}")
    return ridge_solve(ds.features[mask], y[mask], penalty, _has_intercept(ds))


def fit_nuisance(ds: Dataset, penalty: float = 1e-6, reward_field: str = "certified") -> NuisancePair:
    """Arm-specific ridge nuisances on the chosen reward."""
    return NuisancePair(
        fit_ridge_arm(ds, 1, penalty, reward_field),
        fit_ridge_arm(ds, -1, penalty, reward_field),
    )


def fit_treatment_free(ds: Dataset, penalty: float = 1e-6, reward_field: str = "certified") -> NuisancePair:
    m = ridge_solve(ds.features, ds.reward(reward_field), penalty, _has_intercept(ds))
    return NuisancePair.shared(m)

"""Weighted hinge classification by deterministic full-batch subgradient descent."""
from __future__ import annotations

import math

import numpy as np

from ..certify import NuisancePair
from ..data import Dataset
from ..reduction import advantage_arrays

STEP_SCALE = 0.5
N_STEPS = 500
WEIGHT_FLOOR = 1e-12


def penalty_mask(dim: int, intercept_last: bool = True) -> np.ndarray:
    mask = np.ones(dim)
    if intercept_last:
        mask[-1] = 0.0
    return mask


def hinge_objective(beta, F, y, w, penalty: float, intercept_last: bool = True) -> float:
    """mean(w * (1 - y f)_+) + penalty * ||beta without intercept||^2."""
    beta = np.asarray(beta, dtype=float)
    f = F @ beta
    mask = penalty_mask(beta.shape[0], intercept_last)
    val = float(np.mean(w * np.maximum(1.0 - y * f, 0.0)) + penalty * np.sum(mask * beta ** 2))
    if not math.isfinite(val):
        raise FloatingPointError("non-finite hinge objective")
    return val


def clamp_beta(beta: np.ndarray, F: np.ndarray, bound: float) -> np.ndarray:
    """Shrink beta so that max_i |f_beta(x_i)| <= bound."""
    top = float(np.max(np.abs(F @ beta))) if F.shape[0] else 0.0
    if top > bound:
        return beta * (bound / top)
    return beta


def weighted_hinge_fit(F, y, w, penalty: float, *, intercept_last: bool = True,
                       steps: int = N_STEPS, step_scale: float = STEP_SCALE) -> np.ndarray:
    """Approximate minimizer of the penalized weighted hinge objective.

    Steps are step_scale / sqrt(t) from a zero start; the returned point is
    the average of the second half of the iterates. Weights are rescaled by
    their mean (with the penalty rescaled alike), which leaves the minimizer
    unchanged but keeps the step schedule independent of the weight scale.
    The quadratic penalty enters through its proximal map, so large
    penalties cannot make the iteration diverge. A mean weight below
    WEIGHT_FLOOR counts as all-zero and returns the zero vector.
    """
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n, p = F.shape
    scale = float(np.mean(w)) if n else 0.0
    if not scale > WEIGHT_FLOOR:
        return np.zeros(p)
    w = w / scale
    pen = penalty / scale
    mask = penalty_mask(p, intercept_last)
    wy = w * y
    beta = np.zeros(p)
    avg = np.zeros(p)
    start = steps // 2
    for t in range(1, steps + 1):
        active = y * (F @ beta) < 1.0
        step = step_scale / math.sqrt(t)
        beta = (beta + step * (F[active].T @ wy[active]) / n) / (1.0 + 2.0 * step * pen * mask)
        if t > start:
            avg += beta
    avg /= steps - start
    if not np.all(np.isfinite(avg)):
        raise FloatingPointError("hinge optimizer diverged")
    return avg


def map_penalty(lam: float, lam0: float, n: int) -> float:
    """Penalty weight lam0 / (lam n) of the MAP objective."""
    if lam <= 0 or lam0 <= 0:
        raise ValueError("lambda and lambda0 must be positive")
    return lam0 / (lam * n)


def surrogate_log_density(beta, F, y, w, lam: float, lam0: float, intercept_last: bool = True) -> float:
    """Unnormalized log-density of the hinge posterior under exp(-lam0 J) prior."""
    beta = np.asarray(beta, dtype=float)
    loss_sum = float(np.sum(w * np.maximum(1.0 - y * (F @ beta), 0.0)))
    J = float(np.sum(penalty_mask(beta.shape[0], intercept_last) * beta ** 2))
    return -lam * loss_sum - lam0 * J


def hinge_map(ds: Dataset, nu: NuisancePair, lam: float, lam0: float, score_bound: float = 3.0) -> np.ndarray:
    """MAP coefficients of the certified-hinge posterior for a fixed nuisance."""
    _, y, w = advantage_arrays(ds, nu)
    intercept = ds.feature_kind.value != "identity"
    beta = weighted_hinge_fit(ds.features, y, w, map_penalty(lam, lam0, ds.n), intercept_last=intercept)
    return clamp_beta(beta, ds.features, score_bound)


def hinge_loss_hat(scores: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    return float(np.mean(w * np.maximum(1.0 - y * scores, 0.0)))

"""OWL, residual weighted learning and Q-learning baselines."""
from __future__ import annotations

import numpy as np

from ..data import Dataset, PolicyParams, sign_rule
from .config import LearnerConfig
from .hinge import clamp_beta, weighted_hinge_fit
from .ridge import ridge_solve


def fold_ids(n: int, k: int, seed: int) -> np.ndarray:
    """Deterministic balanced fold labels 0..k-1."""
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    ids[perm] = np.arange(n) % k
    return ids


def _intercept(ds: Dataset) -> bool:
    return ds.feature_kind.value != "identity"


def _ipw(rew, a, pi_a, d) -> float:
    return float(np.mean(rew * (a == d) / pi_a))


def owl_weights(ds: Dataset, reward_field: str) -> tuple[np.ndarray, np.ndarray]:
    return ds.a.astype(float), ds.reward(reward_field) / ds.pi_a


def rwl_weights(ds: Dataset, reward_field: str, m_pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    resid = ds.reward(reward_field) - m_pred
    return ds.a * sign_rule(resid), np.abs(resid) / ds.pi_a


def _cv_hinge(ds: Dataset, y, w, cfg: LearnerConfig, seed: int, criterion) -> float:
    """Penalty from the CV grid maximizing the held-out criterion (ties: smaller)."""
    if len(cfg.cv_penalty_grid) == 1:
        return cfg.cv_penalty_grid[0]
    k = min(cfg.cv_folds, ds.n)
    ids = fold_ids(ds.n, k, seed)
    F = ds.features
    best_pen, best_val = None, -np.inf
    for pen in cfg.cv_penalty_grid:
        vals = []
        for f in range(k):
            tr, te = ids != f, ids == f
            if not np.any(tr) or not np.any(te):
                continue
            beta = weighted_hinge_fit(F[tr], y[tr], w[tr], pen, intercept_last=_intercept(ds))
            vals.append(criterion(te, sign_rule(F[te] @ beta)))
        val = float(np.mean(vals))
        if val > best_val:
            best_pen, best_val = pen, val
    return best_pen


def owl_fit(ds: Dataset, cfg: LearnerConfig = LearnerConfig(), reward_field: str = "proxy",
            seed: int = 0) -> PolicyParams:
    """Outcome weighted learning: labels A, weights reward / pi(A|X)."""
    y, w = owl_weights(ds, reward_field)
    rew = ds.reward(reward_field)
    crit = lambda te, d: _ipw(rew[te], ds.a[te], ds.pi_a[te], d)
    pen = _cv_hinge(ds, y, w, cfg, seed, crit)
    beta = weighted_hinge_fit(ds.features, y, w, pen, intercept_last=_intercept(ds))
    return PolicyParams.for_dataset(clamp_beta(beta, ds.features, cfg.score_bound), ds, cfg.score_bound)


def rwl_fit(ds: Dataset, cfg: LearnerConfig = LearnerConfig(), reward_field: str = "proxy",
            seed: int = 0) -> PolicyParams:
    """Residual weighted learning with a treatment-free ridge residual model.

    The tuning criterion is the residualized IPW value
    mean((reward - m) 1{A = d} / pi) + mean(m).
    """
    free = (-1,) if _intercept(ds) else ()
    rew = ds.reward(reward_field)
    m_coef = ridge_solve(ds.features, rew, cfg.ridge_penalty_nuisance, free)
    m_pred = np.clip(ds.features @ m_coef, 0.0, 1.0)
    y, w = rwl_weights(ds, reward_field, m_pred)
    resid = rew - m_pred

    def crit(te, d):
        return _ipw(resid[te], ds.a[te], ds.pi_a[te], d) + float(np.mean(m_pred[te]))

    pen = _cv_hinge(ds, y, w, cfg, seed, crit)
    beta = weighted_hinge_fit(ds.features, y, w, pen, intercept_last=_intercept(ds))
    return PolicyParams.for_dataset(clamp_beta(beta, ds.features, cfg.score_bound), ds, cfg.score_bound)


def _q_design(F: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.hstack([F, a[:, None] * F])


def qlearn_coefficients(ds: Dataset, penalty: float, reward_field: str, idx=None) -> tuple[np.ndarray, np.ndarray]:
    """Ridge fit of Q(x, a) = beta' h(x) + a psi' h(x); returns (beta, psi)."""
    F = ds.features if idx is None else ds.features[idx]
    a = ds.a if idx is None else ds.a[idx]
    rew = ds.reward(reward_field) if idx is None else ds.reward(reward_field)[idx]
    p = F.shape[1]
    free = (p - 1, 2 * p - 1) if _intercept(ds) else ()
    coef = ridge_solve(_q_design(F, a.astype(float)), rew, penalty, free)
    return coef[:p], coef[p:]


def qlearn_fit(ds: Dataset, cfg: LearnerConfig = LearnerConfig(), reward_field: str = "proxy",
               seed: int = 0) -> PolicyParams:
    """Linear Q-learning; penalty by cross-validated squared prediction error."""
    rew = ds.reward(reward_field)
    k = min(cfg.cv_folds, ds.n)
    ids = fold_ids(ds.n, k, seed)
    best_pen, best_mse = None, np.inf
    for pen in cfg.cv_penalty_grid:
        errs = []
        for f in range(k):
            tr, te = ids != f, ids == f
            if not np.any(tr) or not np.any(te):
                continue
            b, psi = qlearn_coefficients(ds, pen, reward_field, tr)
            pred = ds.features[te] @ b + ds.a[te] * (ds.features[te] @ psi)
            errs.append(np.mean((rew[te] - pred) ** 2))
        mse = float(np.mean(errs))
        if mse < best_mse:
            best_pen, best_mse = pen, mse
    _, psi = qlearn_coefficients(ds, best_pen, reward_field)
    return PolicyParams.for_dataset(psi, ds, cfg.score_bound)

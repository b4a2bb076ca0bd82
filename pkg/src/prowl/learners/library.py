"""Finite candidate library for the PAC-Bayesian learner."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..certify import NuisancePair, gamma_scores
from ..data import Dataset, sign_rule
from ..pacbayes import BoundConfig, PosteriorLibrary
from ..reduction import advantage_arrays
from .baselines import qlearn_coefficients
from .config import LearnerConfig
from .hinge import clamp_beta, weighted_hinge_fit
from .ridge import fit_nuisance, fit_treatment_free

PROVENANCES = (
    "prior-particle", "anchor-gaussian", "anchor-hinge", "anchor-residual",
    "anchor-plugin", "perturbation",
)

# Optimization anchor families scanned over the auxiliary penalty grid.
ANCHOR_FAMILIES = ("anchor-hinge", "anchor-residual", "anchor-plugin")


@dataclass(frozen=True)
class Candidate:
    beta: np.ndarray
    nuisance: NuisancePair
    provenance: str
    penalty: float | None = None
    parent: int | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


def library_size(cfg: LearnerConfig) -> int:
    n_anchor = cfg.anchors + len(cfg.aux_penalty_grid) * len(ANCHOR_FAMILIES)
    return cfg.prior_particles + n_anchor + cfg.perturbations_per_anchor * n_anchor


def evaluate_candidates(ds: Dataset, candidates, score_bound: float) -> tuple[np.ndarray, np.ndarray]:
    """Empirical certified value and certified hinge loss of every candidate."""
    F = ds.features
    B = np.array([c.beta for c in candidates])
    S = np.clip(F @ B.T, -score_bound, score_bound)   # (n, k)
    D = sign_rule(S)
    v_hat = np.empty(len(candidates))
    hinge = np.empty(len(candidates))
    cache = {}
    for j, c in enumerate(candidates):
        key = id(c.nuisance)
        if key not in cache:
            g_pos, g_neg = gamma_scores(ds, c.nuisance)
            _, y, w = advantage_arrays(ds, c.nuisance)
            cache[key] = (g_pos, g_neg, y, w)
        g_pos, g_neg, y, w = cache[key]
        v_hat[j] = np.mean(np.where(D[:, j] == 1, g_pos, g_neg))
        hinge[j] = np.mean(w * np.maximum(1.0 - y * S[:, j], 0.0))
    return v_hat, hinge


def build_library(ds: Dataset, cfg: LearnerConfig = LearnerConfig(), bound_cfg: BoundConfig | None = None,
                  seed: int = 0, nuisance_ds: Dataset | None = None) -> PosteriorLibrary:
    """Prior particles, Gaussian anchors, optimization anchors and perturbations.

    Nuisances are fitted on ``nuisance_ds`` (default: ``ds`` itself). All
    random draws come from one seeded generator, drawn before any fitting.
    """
    nds = ds if nuisance_ds is None else nuisance_ds
    F = ds.features
    p = F.shape[1]
    intercept = ds.feature_kind.value != "identity"
    n_opt = len(cfg.aux_penalty_grid) * len(ANCHOR_FAMILIES)
    n_anchor = cfg.anchors + n_opt

    rng = np.random.default_rng(seed)
    prior_draws = rng.normal(0.0, cfg.prior_sd, size=(cfg.prior_particles, p))
    anchor_draws = rng.normal(0.0, cfg.prior_sd, size=(cfg.anchors, p))
    jitter = rng.normal(0.0, cfg.local_scale, size=(n_anchor, cfg.perturbations_per_anchor, p))

    arm_nu = fit_nuisance(nds, cfg.ridge_penalty_nuisance, "certified")
    free_nu = fit_treatment_free(nds, cfg.ridge_penalty_nuisance, "certified")

    candidates = [Candidate(b, arm_nu, "prior-particle") for b in prior_draws]
    anchors = [Candidate(b, arm_nu, "anchor-gaussian") for b in anchor_draws]

    _, y_arm, w_arm = advantage_arrays(ds, arm_nu)
    _, y_free, w_free = advantage_arrays(ds, free_nu)
    for pen in cfg.aux_penalty_grid:
        beta = weighted_hinge_fit(F, y_arm, w_arm, pen, intercept_last=intercept)
        anchors.append(Candidate(clamp_beta(beta, F, cfg.score_bound), arm_nu, "anchor-hinge", pen))
    for pen in cfg.aux_penalty_grid:
        beta = weighted_hinge_fit(F, y_free, w_free, pen, intercept_last=intercept)
        anchors.append(Candidate(clamp_beta(beta, F, cfg.score_bound), free_nu, "anchor-residual", pen))
    for pen in cfg.aux_penalty_grid:
        _, psi = qlearn_coefficients(ds, pen, "certified")
        anchors.append(Candidate(clamp_beta(psi, F, cfg.score_bound), arm_nu, "anchor-plugin", pen))

    first_anchor = len(candidates)
    candidates.extend(anchors)
    for i, anc in enumerate(anchors):
        for e in jitter[i]:
            candidates.append(Candidate(anc.beta + e, anc.nuisance, "perturbation", anc.penalty, first_anchor + i))

    v_hat, hinge = evaluate_candidates(ds, candidates, cfg.score_bound)
    if bound_cfg is not None:
        lo, hi = bound_cfg.gamma_range
        tol = 1e-9 * hi
        if np.any(v_hat < lo - tol) or np.any(v_hat > hi + tol):
            raise ValueError("candidate value outside the certified score range; check epsilon")
    counts = {prov: sum(c.provenance == prov for c in candidates) for prov in PROVENANCES}
    meta = {
        "size": len(candidates),
        "counts": counts,
        "prior": "uniform",
        "library_conditional": True,
        "seed": seed,
        "n": ds.n,
    }
    return PosteriorLibrary.uniform(candidates, v_hat, hinge, meta)

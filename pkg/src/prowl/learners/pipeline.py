"""End-to-end fit: library, posterior selection and deployment rules."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..certify import check_overlap
from ..data import Dataset, PolicyParams
from ..pacbayes import (
    BoundConfig,
    PosteriorLibrary,
    hinge_posterior,
    posterior_lcb,
    select_family,
    select_temperature,
    select_temperature_product,
)
from .config import LearnerConfig
from .library import build_library


@dataclass
class FitResult:
    library: PosteriorLibrary
    posterior: np.ndarray
    gamma_star: float
    eta_star: float | None
    lambda_star: float | None
    lcb_star: float
    n: int
    dataset: Dataset = field(repr=False)
    learner_config: LearnerConfig = field(default_factory=LearnerConfig)
    bound_config: BoundConfig = field(default_factory=BoundConfig)
    metadata: dict = field(default_factory=dict)

    def recompute_lcb(self) -> float:
        return posterior_lcb(self.library, self.posterior, self.gamma_star, self.n, self.bound_config)

    def to_dict(self) -> dict[str, Any]:
        cands = []
        for c in self.library.candidates:
            nu = c.nuisance
            cands.append({
                "beta": c.beta.tolist(),
                "provenance": c.provenance,
                "penalty": c.penalty,
                "nuisance": {
                    "coef_pos": None if nu.coef_pos is None else nu.coef_pos.tolist(),
                    "coef_neg": None if nu.coef_neg is None else nu.coef_neg.tolist(),
                    "treatment_free": None if nu.treatment_free is None else nu.treatment_free.tolist(),
                },
            })
        std = self.dataset.standardization
        return {
            "candidates": cands,
            "prior": self.library.prior.tolist(),
            "posterior": np.asarray(self.posterior).tolist(),
            "v_hat": self.library.v_hat.tolist(),
            "gamma": self.gamma_star,
            "eta": self.eta_star,
            "lambda": self.lambda_star,
            "lcb": self.lcb_star,
            "n": self.n,
            "feature_kind": self.dataset.feature_kind.value,
            "standardization": None if std is None else {"mean": std.mean.tolist(), "scale": std.scale.tolist()},
            "config": {
                "learner": asdict(self.learner_config),
                "bound": asdict(self.bound_config),
            },
            "metadata": self.metadata,
        }

    def to_json(self, path=None, indent=None) -> str:
        text = json.dumps(self.to_dict(), indent=indent, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def stratified_halves(ds: Dataset, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Arm-stratified split into (nuisance half, policy half) index arrays."""
    rng = np.random.default_rng(seed)
    first, second = [], []
    for arm in (1, -1):
        idx = np.flatnonzero(ds.a == arm)
        idx = idx[rng.permutation(idx.shape[0])]
        half = idx.shape[0] // 2
        first.append(idx[:half])
        second.append(idx[half:])
    return np.sort(np.concatenate(first)), np.sort(np.concatenate(second))


def prowl_fit(ds: Dataset, cfg: LearnerConfig = LearnerConfig(), bound_cfg: BoundConfig = BoundConfig(),
              seed: int = 0, temperature_mode: str = "tied", hinge_family: bool = False) -> FitResult:
    """Fit the finite-library posterior that maximizes the value LCB.

    ``temperature_mode`` is "tied" (eta = gamma) or "product" (independent
    grids). With ``hinge_family`` the hinge-loss posteriors over the lambda
    grid join the candidate family and the overall LCB maximizer is kept.
    """
    check_overlap(np.minimum(ds.pi_plus, 1.0 - ds.pi_plus), bound_cfg.epsilon)
    if cfg.split_free:
        learn_ds, nuis_ds = ds, ds
    else:
        nuis_idx, learn_idx = stratified_halves(ds, seed)
        if nuis_idx.size == 0 or learn_idx.size == 0:
            raise ValueError("sample too small to split")
        learn_ds, nuis_ds = ds.take(learn_idx), ds.take(nuis_idx)
    lib = build_library(learn_ds, cfg, bound_cfg, seed, nuisance_ds=nuis_ds)
    n = learn_ds.n
    if temperature_mode == "tied":
        choice = select_temperature(lib, n, bound_cfg)
    elif temperature_mode == "product":
        choice = select_temperature_product(lib, n, bound_cfg)
    else:
        raise ValueError(f"unknown temperature mode {temperature_mode!r}")
    q, gamma, eta, lam, lcb = choice.posterior, choice.gamma, choice.eta, None, choice.lcb
    family = "value"
    if hinge_family:
        posts = {l: hinge_posterior(lib, l, n) for l in bound_cfg.lambda_grid}
        l_star, g_star, h_lcb = select_family(posts, lib, n, bound_cfg)
        if h_lcb > lcb:
            q, gamma, eta, lam, lcb, family = posts[l_star], g_star, None, l_star, h_lcb, "hinge"
    lib = lib.with_posterior(q)
    meta = dict(lib.metadata)
    meta.update({
        "temperature_mode": temperature_mode,
        "family": family,
        "split_free": cfg.split_free,
        "mean_rule": "posterior-averaged beta, then sign",
        "lcb_table": [list(row) for row in choice.table],
    })
    return FitResult(lib, q, gamma, eta, lam, lcb, n, learn_ds, cfg, bound_cfg, meta)


def deploy(fit: FitResult, mode: str = "map", seed: int | None = None) -> PolicyParams:
    """Deterministic MAP or mean rule, or one posterior draw for mode "gibbs"."""
    q = np.asarray(fit.posterior, dtype=float)
    if q.size == 0:
        raise ValueError("empty posterior")
    cands = fit.library.candidates
    bound = fit.learner_config.score_bound
    if mode == "map":
        beta = cands[int(np.argmax(q))].beta
    elif mode == "mean":
        beta = np.sum(q[:, None] * np.array([c.beta for c in cands]), axis=0)
    elif mode == "gibbs":
        idx = int(np.random.default_rng(seed).choice(q.shape[0], p=q))
        beta = cands[idx].beta
    else:
        raise ValueError(f"unknown deployment mode {mode!r}")
    return PolicyParams.for_dataset(beta, fit.dataset, bound)

"""PAC-Bayes bound arithmetic over finite candidate libraries.

All exponential-weight computations are max-shifted. Grid argmaxes break ties
toward the smallest index, which for ascending grids means the smallest value.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

DEFAULT_GRID = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


def _check_grid(grid, name):
    g = tuple(float(v) for v in grid)
    if not g:
        raise ValueError(f"{name} must be nonempty")
    if any(v <= 0 for v in g) or any(b <= a for a, b in zip(g, g[1:])):
        raise ValueError(f"{name} must be strictly positive and ascending")
    return g


@dataclass(frozen=True)
class BoundConfig:
    epsilon: float = 0.5
    delta: float = 0.1
    eta_grid: tuple = DEFAULT_GRID
    gamma_grid: tuple = DEFAULT_GRID
    lambda_grid: tuple = DEFAULT_GRID

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in (0, 0.5]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("eta_grid", "gamma_grid", "lambda_grid"):
            object.__setattr__(self, name, _check_grid(getattr(self, name), name))

    @property
    def c_eps(self) -> float:
        return 1.0 / self.epsilon

    @property
    def k_eps(self) -> float:
        return 2.0 / self.epsilon - 1.0

    @property
    def gamma_range(self) -> tuple[float, float]:
        return 1.0 - 1.0 / self.epsilon, 1.0 / self.epsilon


def xi(n: int) -> float:
    """exp(1/(12n)) * sqrt(pi n / 2) + 2."""
    if n < 1:
        raise ValueError("xi(n) needs n >= 1")
    return math.exp(1.0 / (12.0 * n)) * math.sqrt(math.pi * n / 2.0) + 2.0


def bernoulli_kl(p: float, q: float) -> float:
    """kl(p || q) between Bernoulli means, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise ValueError("Bernoulli means must lie in [0, 1]")
    if q in (0.0, 1.0):
        if p == q:
            return 0.0
        raise ValueError("kl is infinite when q is 0 or 1 and p differs")
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return max(out, 0.0)


def value_loss(gamma_value, cfg: BoundConfig):
    """Affine map (c_eps - Gamma) / K_eps from the score range onto [0, 1]."""
    g = np.asarray(gamma_value, dtype=float)
    lo, hi = cfg.gamma_range
    tol = 1e-9 * max(1.0, hi)
    if np.any(g < lo - tol) or np.any(g > hi + tol):
        raise ValueError(f"certified score outside [{lo}, {hi}]")
    out = np.clip((cfg.c_eps - g) / cfg.k_eps, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def discrete_kl(q, p) -> float:
    """KL(q || p) for probability vectors over the same finite support."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise ValueError("probability vectors differ in length")
    mask = q > 0
    if np.any(p[mask] <= 0):
        raise ValueError("posterior puts mass outside the prior support")
    return max(float(np.sum(q[mask] * np.log(q[mask] / p[mask]))), 0.0)


def _normalize(logw: np.ndarray, prior: np.ndarray) -> np.ndarray:
    out = np.zeros_like(prior)
    support = prior > 0
    if not np.any(support):
        raise ValueError("prior has no mass")
    lw = logw[support] + np.log(prior[support])
    lw -= lw.max()
    w = np.exp(lw)
    out[support] = w / w.sum()
    return out


@dataclass(frozen=True)
class PosteriorLibrary:
    """Finite candidate library with prior, posterior and per-candidate fits.

    ``candidates`` is opaque here; the learners attach Candidate objects.
    """

    candidates: Sequence[Any]
    prior: np.ndarray
    v_hat: np.ndarray
    hinge_loss: np.ndarray | None = None
    posterior: np.ndarray | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float)
        v_hat = np.asarray(self.v_hat, dtype=float)
        if prior.ndim != 1 or prior.shape != v_hat.shape or prior.shape[0] != len(self.candidates):
            raise ValueError("prior, v_hat and candidates must have one entry per candidate")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-12:
            raise ValueError("prior must be a probability vector")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "v_hat", v_hat)
        if self.hinge_loss is not None:
            object.__setattr__(self, "hinge_loss", np.asarray(self.hinge_loss, dtype=float))
        if self.posterior is not None:
            q = np.asarray(self.posterior, dtype=float)
            if q.shape != prior.shape or abs(q.sum() - 1.0) > 1e-12 or np.any(q < 0):
                raise ValueError("posterior must be a probability vector")
            if np.any(q[prior == 0] > 0):
                raise ValueError("posterior support exceeds prior support")
            object.__setattr__(self, "posterior", q)

    def __len__(self):
        return len(self.candidates)

    def with_posterior(self, q) -> "PosteriorLibrary":
        return replace(self, posterior=np.asarray(q, dtype=float))

    @classmethod
    def uniform(cls, candidates, v_hat, hinge_loss=None, metadata=None) -> "PosteriorLibrary":
        k = len(candidates)
        return cls(list(candidates), np.full(k, 1.0 / k), v_hat, hinge_loss, None, dict(metadata or {}))


def gibbs_posterior(lib: PosteriorLibrary, eta: float, n: int, cfg: BoundConfig) -> np.ndarray:
    """Weights proportional to prior * exp(eta n V_hat / K_eps)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    return _normalize(eta * n * lib.v_hat / cfg.k_eps, lib.prior)


def hinge_posterior(lib: PosteriorLibrary, lam: float, n: int) -> np.ndarray:
    """Surrogate posterior proportional to prior * exp(-lam n L_hinge)."""
    if lib.hinge_loss is None:
        raise ValueError("library has no hinge losses")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return _normalize(-lam * n * lib.hinge_loss, lib.prior)


def posterior_value(lib: PosteriorLibrary, q) -> float:
    return float(np.dot(q, lib.v_hat))


def fixed_eta_bound(lib: PosteriorLibrary, eta: float, n: int, cfg: BoundConfig, q=None) -> float:
    """Fixed-learning-rate lower bound evaluated at the library posterior (or ``q``)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    q = lib.posterior if q is None else np.asarray(q, dtype=float)
    if q is None:
        raise ValueError("no posterior to evaluate")
    kl = discrete_kl(q, lib.prior)
    return posterior_value(lib, q) - cfg.k_eps * ((kl + math.log(1.0 / cfg.delta)) / (eta * n) + eta / 8.0)


def catoni_lcb(kl_term: float, l_hat: float, n: int, gamma: float, cfg: BoundConfig) -> float:
    """Catoni-form lower confidence bound on the target value.

    Not clamped: values below the score range are vacuous but valid.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if kl_term < 0:
        raise ValueError("KL term must be nonnegative")
    if not -1e-12 <= l_hat <= 1.0 + 1e-12:
        raise ValueError("empirical loss must lie in [0, 1]")
    c_nd = (kl_term + math.log(xi(n) / cfg.delta)) / n
    return cfg.c_eps - cfg.k_eps * (-math.expm1(-c_nd - gamma * l_hat)) / (-math.expm1(-gamma))


def posterior_lcb(lib: PosteriorLibrary, q, gamma: float, n: int, cfg: BoundConfig) -> float:
    q = np.asarray(q, dtype=float)
    l_hat = (cfg.c_eps - posterior_value(lib, q)) / cfg.k_eps
    return catoni_lcb(discrete_kl(q, lib.prior), min(max(l_hat, 0.0), 1.0), n, gamma, cfg)


@dataclass(frozen=True)
class TemperatureChoice:
    gamma: float
    eta: float
    lcb: float
    posterior: np.ndarray
    table: tuple = ()   # (eta, gamma, lcb) for every grid cell


def select_temperature(lib: PosteriorLibrary, n: int, cfg: BoundConfig,
                       posterior_at: Callable[[float], np.ndarray] | None = None) -> TemperatureChoice:
    """Tied mode: the LCB at scale gamma is evaluated at the Gibbs posterior with eta = gamma."""
    if not cfg.gamma_grid:
        raise ValueError("empty temperature grid")
    if posterior_at is None:
        posterior_at = lambda g: gibbs_posterior(lib, g, n, cfg)
    best = None
    table = []
    for g in cfg.gamma_grid:
        q = posterior_at(g)
        val = posterior_lcb(lib, q, g, n, cfg)
        table.append((g, g, val))
        if best is None or val > best.lcb:
            best = TemperatureChoice(g, g, val, q)
    return replace(best, table=tuple(table))


def select_temperature_product(lib: PosteriorLibrary, n: int, cfg: BoundConfig) -> TemperatureChoice:
    """Independent (eta, gamma) product grid; eta sets the posterior, gamma the bound."""
    best = None
    table = []
    for eta in cfg.eta_grid:
        q = gibbs_posterior(lib, eta, n, cfg)
        for g in cfg.gamma_grid:
            val = posterior_lcb(lib, q, g, n, cfg)
            table.append((eta, g, val))
            if best is None or val > best.lcb:
                best = TemperatureChoice(g, eta, val, q)
    return replace(best, table=tuple(table))


def select_family(posteriors: Mapping[float, np.ndarray], lib: PosteriorLibrary, n: int,
                  cfg: BoundConfig) -> tuple[float, float, float]:
    """Joint argmax of the LCB over (lambda, gamma); ties go to the smaller pair."""
    if not posteriors or not cfg.gamma_grid:
        raise ValueError("empty family or temperature grid")
    best = None
    for lam in sorted(posteriors):
        q = np.asarray(posteriors[lam], dtype=float)
        for g in cfg.gamma_grid:
            val = posterior_lcb(lib, q, g, n, cfg)
            if best is None or val > best[2]:
                best = (lam, g, val)
    return best


def combine_confidence(alpha_cert: float, delta: float) -> float:
    """Joint confidence (1 - alpha_cert)(1 - delta) for calibrated certificates."""
    if not 0.0 <= alpha_cert < 1.0 or not 0.0 <= delta < 1.0:
        raise ValueError("alpha_cert and delta must lie in [0, 1)")
    return (1.0 - alpha_cert) * (1.0 - delta)


BOUND_REPORT_FIELDS = ("n", "epsilon", "delta", "gamma", "kl", "l_hat", "xi_n", "lcb")


def bound_report(lib: PosteriorLibrary, q, gammas: Sequence[float], n: int, cfg: BoundConfig) -> list[dict]:
    """One row per temperature with every ingredient of the Catoni LCB at posterior ``q``."""
    q = np.asarray(q, dtype=float)
    kl = discrete_kl(q, lib.prior)
    l_hat = min(max((cfg.c_eps - posterior_value(lib, q)) / cfg.k_eps, 0.0), 1.0)
    return [
        {"n": n, "epsilon": cfg.epsilon, "delta": cfg.delta, "gamma": float(g), "kl": kl,
         "l_hat": l_hat, "xi_n": xi(n), "lcb": catoni_lcb(kl, l_hat, n, g, cfg)}
        for g in gammas
    ]


def write_bound_report(rows: Sequence[Mapping[str, Any]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BOUND_REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(row[k])) if k != "n" else int(row[k]) for k in BOUND_REPORT_FIELDS})

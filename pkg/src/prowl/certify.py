"""Certificates, certified lower rewards and the doubly robust certified score."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Observation, PolicyParams, decisions


class PropensityError(ValueError):
    """A propensity fell below the overlap floor epsilon."""


def lower_reward(r, u):
    """Certified lower reward (r - u)_+ for rewards and certificates in [0, 1]."""
    r_arr = np.asarray(r, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any((r_arr < 0) | (r_arr > 1)) or np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("reward and certificate must lie in [0, 1]")
    out = np.maximum(r_arr - u_arr, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CompositeUtilitySpec:
    """Baseline weights w0 on the simplex with box tolerance rho * delta."""

    w0: tuple
    delta: tuple
    rho: float

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        if w0.ndim != 1 or w0.shape != delta.shape:
            raise ValueError("w0 and delta must be vectors of equal length")
        if np.any(w0 < 0) or abs(w0.sum() - 1.0) > 1e-9:
            raise ValueError("w0 must lie on the probability simplex")
        if np.any(delta < 0) or self.rho < 0:
            raise ValueError("delta and rho must be nonnegative")
        lo, hi = self.bounds()
        if lo.sum() > 1.0 + 1e-12 or hi.sum() < 1.0 - 1e-12:
            raise ValueError("box and simplex do not intersect")
        object.__setattr__(self, "w0", tuple(w0))
        object.__setattr__(self, "delta", tuple(delta))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        w0 = np.asarray(self.w0, dtype=float)
        spread = self.rho * np.asarray(self.delta, dtype=float)
        return np.clip(w0 - spread, 0.0, 1.0), np.clip(w0 + spread, 0.0, 1.0)


def worst_case_weights(g, spec: CompositeUtilitySpec) -> np.ndarray:
    """Minimizer of w . g over {w in simplex : |w - w0| <= rho * delta}.

    Start every weight at its lower bound, then pour the remaining mass into
    components in ascending order of g, each up to its upper bound.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (len(spec.w0),):
        raise ValueError("outcome vector and weights differ in dimension")
    lo, hi = spec.bounds()
    w = lo.copy()
    remaining = 1.0 - lo.sum()
    for j in np.argsort(g, kind="stable"):
        if remaining <= 0:
            break
        add = min(hi[j] - lo[j], remaining)
        w[j] += add
        remaining -= add
    return w


def composite_certificate(g, spec: CompositeUtilitySpec) -> tuple[float, float, float]:
    """Return (r, under_r, u) for a composite outcome vector ``g``."""
    g = np.asarray(g, dtype=float)
    if np.any((g < 0) | (g > 1)):
        raise ValueError("composite outcomes must lie in [0, 1]")
    r = float(np.dot(spec.w0, g))
    under_r = float(np.dot(worst_case_weights(g, spec), g))
    under_r = min(under_r, r)
    return r, under_r, r - under_r


@dataclass(frozen=True)
class NuisancePair:
    """Arm-specific outcome regressions over a feature map.

    When ``treatment_free`` is set, both arms share the single regression m.
    Predictions are clipped to [0, 1].
    """

    coef_pos: np.ndarray | None
    coef_neg: np.ndarray | None
    treatment_free: np.ndarray | None = None

    def __post_init__(self):
        for name in ("coef_pos", "coef_neg", "treatment_free"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=float).ravel()
                v.setflags(write=False)
                object.__setattr__(self, name, v)
        if self.treatment_free is None and (self.coef_pos is None or self.coef_neg is None):
            raise ValueError("need both arm coefficients or a treatment-free coefficient")

    @classmethod
    def zero(cls, dim: int) -> "NuisancePair":
        return cls(np.zeros(dim), np.zeros(dim))

    @classmethod
    def shared(cls, m) -> "NuisancePair":
        return cls(None, None, treatment_free=m)

    @property
    def dim(self) -> int:
        ref = self.treatment_free if self.treatment_free is not None else self.coef_pos
        return ref.shape[0]

    def predict(self, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        F = np.atleast_2d(F)
        if F.shape[1] != self.dim:
            raise ValueError("nuisance coefficients do not match the feature dimension")
        if self.treatment_free is not None:
            m = np.clip(F @ self.treatment_free, 0.0, 1.0)
            return m, m
        return np.clip(F @ self.coef_pos, 0.0, 1.0), np.clip(F @ self.coef_neg, 0.0, 1.0)

    def predict_arm(self, F: np.ndarray, arm: int) -> np.ndarray:
        pos, neg = self.predict(F)
        return pos if arm == 1 else neg


def check_overlap(pi, epsilon: float) -> None:
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < epsilon - 1e-15):
        raise PropensityError(f"propensity {pi.min():.6g} below overlap floor {epsilon}")


def gamma_arm(obs: Observation, arm: int, pi_arm: float, nu: NuisancePair, x_feat,
              epsilon: float | None = None) -> float:
    """Doubly robust certified score for one arm on one observation."""
    if arm not in (-1, 1):
        raise ValueError("arm must be -1 or +1")
    if not 0.0 < pi_arm <= 1.0:
        raise PropensityError(f"propensity {pi_arm} outside (0, 1]")
    if epsilon is not None:
        check_overlap(pi_arm, epsilon)
    nu_a = float(nu.predict_arm(np.asarray(x_feat, dtype=float)[None, :], arm)[0])
    hit = 1.0 if obs.a == arm else 0.0
    return nu_a + hit / pi_arm * (obs.r_lower - nu_a)


def gamma_scores(ds: Dataset, nu: NuisancePair, reward: np.ndarray | None = None,
                 epsilon: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (Gamma_{+1}, Gamma_{-1}) over a dataset.

    ``reward`` defaults to the certified reward; pass the proxy to get the
    uncertified score.
    """
    if epsilon is not None:
        check_overlap(np.minimum(ds.pi_plus, 1.0 - ds.pi_plus), epsilon)
    rew = ds.r_lower if reward is None else reward
    nu_pos, nu_neg = nu.predict(ds.features)
    p = ds.pi_plus
    hit_pos = ds.a == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        g_pos = nu_pos + np.where(hit_pos, (rew - nu_pos) / p, 0.0)
        g_neg = nu_neg + np.where(~hit_pos, (rew - nu_neg) / (1.0 - p), 0.0)
    return g_pos, g_neg


def policy_gamma(ds: Dataset, policy, nu: NuisancePair) -> np.ndarray:
    """Per-observation Gamma_d at the arm chosen by ``policy``."""
    d = decisions(policy, ds)
    g_pos, g_neg = gamma_scores(ds, nu)
    return np.where(d == 1, g_pos, g_neg)


def value_hat(ds: Dataset, policy, nu: NuisancePair) -> float:
    """Empirical certified value: mean of Gamma_d over the sample."""
    if isinstance(policy, PolicyParams):
        policy.check_compatible(ds)
    return float(np.mean(policy_gamma(ds, policy, nu)))


def ipw_value_hat(ds: Dataset, policy, reward_field: str = "certified") -> float:
    """Inverse-propensity value with the proxy or certified reward."""
    d = decisions(policy, ds)
    rew = ds.reward(reward_field)
    return float(np.mean(rew * (ds.a == d) / ds.pi_a))

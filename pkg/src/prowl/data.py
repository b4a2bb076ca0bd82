"""Core data types, feature maps, standardization and the sign convention."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

SCALE_GUARD = 1e-12


class FeatureMapMismatch(ValueError):
    """Raised when a policy or nuisance was built for a different feature map."""


class FeatureKind(str, Enum):
    LINEAR_INTERCEPT = "linear-intercept"
    SCENARIO2_BASIS = "scenario2-basis"
    IDENTITY = "identity"


# Pairwise products in the Scenario 2 clinical basis, 1-based covariate indices.
SCENARIO2_INTERACTIONS: tuple[tuple[int, int], ...] = (
    (1, 2), (3, 4), (1, 3), (1, 4), (2, 3), (2, 4),
    (4, 6), (5, 6), (5, 7), (6, 7), (4, 7), (3, 8),
)

SCENARIO2_DIM = 8 + 4 + 4 + 3 + len(SCENARIO2_INTERACTIONS) + 1


def scenario2_feature_names() -> list[str]:
    """Column names of the Scenario 2 basis, in output order.

    Order: main effects z1..z8, squares z1..z4, sin(z1)..sin(z4), positive
    parts (z5)+..(z7)+, the twelve interactions, intercept (always last).
    """
    names = [f"z{j}" for j in range(1, 9)]
    names += [f"z{j}^2" for j in range(1, 5)]
    names += [f"sin(z{j})" for j in range(1, 5)]
    names += [f"(z{j})+" for j in range(5, 8)]
    names += [f"z{i}*z{j}" for i, j in SCENARIO2_INTERACTIONS]
    names.append("intercept")
    return names


def sign_rule(score):
    """Map a score to an arm with the convention sgn(0) = +1.

    Works on scalars and arrays; raises on non-finite input.
    """
    arr = np.asarray(score, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("sign_rule requires finite scores")
    out = np.where(arr >= 0.0, 1, -1)
    if out.ndim == 0:
        return int(out)
    return out


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        scale = np.array(self.scale, dtype=float)
        mean.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def __eq__(self, other):
        if not isinstance(other, Standardization):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.scale, other.scale)

    def __hash__(self):
        return hash((self.mean.tobytes(), self.scale.tobytes()))


def standardize_fit(raw_rows) -> Standardization:
    """Per-coordinate mean and population standard deviation.

    Columns whose standard deviation falls below 1e-12 get scale 1.
    """
    try:
        X = np.array(raw_rows, dtype=float)
    except ValueError as exc:
        raise ValueError("rows must share one dimension") from exc
    if X.size == 0 or X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("standardize_fit needs a nonempty list of equal-length rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("standardize_fit received non-finite values")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)  # ddof=0
    scale = np.where(sd < SCALE_GUARD, 1.0, sd)
    return Standardization(mean, scale)


def expected_raw_dim(kind: FeatureKind, std: Standardization | None) -> int | None:
    kind = FeatureKind(kind)
    if kind is FeatureKind.SCENARIO2_BASIS:
        return 8
    if std is not None:
        return std.dim
    return None


def feature_dim(kind: FeatureKind, raw_dim: int) -> int:
    kind = FeatureKind(kind)
    if kind is FeatureKind.LINEAR_INTERCEPT:
        return raw_dim + 1
    if kind is FeatureKind.SCENARIO2_BASIS:
        return SCENARIO2_DIM
    return raw_dim


def featurize_matrix(X, kind: FeatureKind, std: Standardization | None) -> np.ndarray:
    """Vectorized feature map; rows of ``X`` are raw covariate vectors."""
    kind = FeatureKind(kind)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise ValueError("featurize received non-finite covariates")
    want = expected_raw_dim(kind, std)
    if want is not None and X.shape[1] != want:
        raise ValueError(f"{kind.value} expects {want} covariates, got {X.shape[1]}")
    if kind is FeatureKind.IDENTITY:
        return X.copy()
    if std is None:
        raise ValueError(f"{kind.value} requires a fitted standardization")
    if std.dim != X.shape[1]:
        raise ValueError("standardization dimension does not match covariates")
    Z = std.apply(X)
    ones = np.ones((Z.shape[0], 1))
    if kind is FeatureKind.LINEAR_INTERCEPT:
        return np.hstack([Z, ones])
    cols = [Z, Z[:, :4] ** 2, np.sin(Z[:, :4]), np.maximum(Z[:, 4:7], 0.0)]
    cols.append(np.column_stack([Z[:, i - 1] * Z[:, j - 1] for i, j in SCENARIO2_INTERACTIONS]))
    cols.append(ones)
    return np.hstack(cols)


def featurize(x, kind: FeatureKind, std: Standardization | None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("featurize expects a single covariate vector")
    return featurize_matrix(x[None, :], kind, std)[0]


@dataclass(frozen=True)
class Observation:
    """One logged unit: covariates, arm, proxy reward, certificate, propensity."""

    x: tuple
    a: int
    r: float
    u: float
    pi_a: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.ravel(self.x)))
        if self.a not in (-1, 1):
            raise ValueError(f"arm must be -1 or +1, got {self.a!r}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"reward {self.r} outside [0, 1]")
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"certificate {self.u} outside [0, 1]")
        if not 0.0 < self.pi_a <= 1.0:
            raise ValueError(f"propensity {self.pi_a} outside (0, 1]")

    @property
    def r_lower(self) -> float:
        return max(self.r - self.u, 0.0)

    @property
    def pi_plus(self) -> float:
        """Propensity of arm +1 implied by the observed arm's propensity."""
        return self.pi_a if self.a == 1 else 1.0 - self.pi_a


@dataclass(frozen=True)
class OracleInfo:
    """Simulation-only oracle fields, stored column-wise.

    ``mu_*`` arrays have shape (n, 2) with column 0 for arm +1 and column 1
    for arm -1. ``mu_lower`` may be None when it was not computed.
    """

    r_star: np.ndarray
    mu_star: np.ndarray
    mu_proxy: np.ndarray
    mu_lower: np.ndarray | None
    pi_plus: np.ndarray

    def __len__(self):
        return self.r_star.shape[0]

    def take(self, idx) -> "OracleInfo":
        return OracleInfo(
            self.r_star[idx], self.mu_star[idx], self.mu_proxy[idx],
            None if self.mu_lower is None else self.mu_lower[idx], self.pi_plus[idx],
        )


@dataclass(frozen=True)
class PotentialOutcomes:
    """Both arms' realized rewards and envelopes; a simulation-only backdoor."""

    r: np.ndarray        # (n, 2) proxy rewards R^{+1}, R^{-1}
    r_star: np.ndarray   # (n, 2) target rewards
    u: np.ndarray        # (n, 2) envelopes U_{rho,+1}(x), U_{rho,-1}(x)

    def take(self, idx) -> "PotentialOutcomes":
        return PotentialOutcomes(self.r[idx], self.r_star[idx], self.u[idx])


def arm_column(arm: int) -> int:
    return 0 if arm == 1 else 1


@dataclass(frozen=True)
class Dataset:
    """Column-oriented logged sample.

    The standardization is fitted once (on the policy-learning sample) and
    shared with any test sample that must be scored with the same features.
    """

    x: np.ndarray
    a: np.ndarray
    r: np.ndarray
    u: np.ndarray
    pi_a: np.ndarray
    feature_kind: FeatureKind = FeatureKind.LINEAR_INTERCEPT
    standardization: Standardization | None = None
    oracle: OracleInfo | None = None
    potential: PotentialOutcomes | None = field(default=None, repr=False)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        a = np.asarray(self.a, dtype=int).ravel()
        r = np.asarray(self.r, dtype=float).ravel()
        u = np.asarray(self.u, dtype=float).ravel()
        pi_a = np.asarray(self.pi_a, dtype=float).ravel()
        n = x.shape[0]
        if n == 0:
            raise ValueError("dataset must be nonempty")
        if not (a.shape[0] == r.shape[0] == u.shape[0] == pi_a.shape[0] == n):
            raise ValueError("dataset columns have inconsistent lengths")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates must be finite")
        if not np.all(np.isin(a, (-1, 1))):
            raise ValueError("arms must be -1 or +1")
        if np.any((r < 0) | (r > 1)) or np.any((u < 0) | (u > 1)):
            raise ValueError("rewards and certificates must lie in [0, 1]")
        if np.any((pi_a <= 0) | (pi_a > 1)):
            raise ValueError("propensities must lie in (0, 1]")
        if self.oracle is not None and len(self.oracle) != n:
            raise ValueError("oracle length differs from the dataset")
        kind = FeatureKind(self.feature_kind)
        std = self.standardization
        if std is None and kind is not FeatureKind.IDENTITY:
            std = standardize_fit(x)
        for arr in (x, a, r, u, pi_a):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "pi_a", pi_a)
        object.__setattr__(self, "feature_kind", kind)
        object.__setattr__(self, "standardization", std)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @cached_property
    def features(self) -> np.ndarray:
        F = featurize_matrix(self.x, self.feature_kind, self.standardization)
        F.setflags(write=False)
        return F

    @cached_property
    def r_lower(self) -> np.ndarray:
        return np.maximum(self.r - self.u, 0.0)

    @cached_property
    def pi_plus(self) -> np.ndarray:
        return np.where(self.a == 1, self.pi_a, 1.0 - self.pi_a)

    def propensity(self, arm: int) -> np.ndarray:
        return self.pi_plus if arm == 1 else 1.0 - self.pi_plus

    def reward(self, field: str) -> np.ndarray:
        if field in ("proxy", "R"):
            return self.r
        if field in ("certified", "underline-R"):
            return self.r_lower
        raise ValueError(f"unknown reward field {field!r}")

    def observations(self) -> Iterator[Observation]:
        for i in range(self.n):
            yield Observation(self.x[i], int(self.a[i]), float(self.r[i]), float(self.u[i]), float(self.pi_a[i]))

    @classmethod
    def from_observations(cls, obs: Sequence[Observation], feature_kind=FeatureKind.LINEAR_INTERCEPT,
                          standardization=None, oracle=None) -> "Dataset":
        obs = list(obs)
        if not obs:
            raise ValueError("dataset must be nonempty")
        return cls(
            x=np.array([o.x for o in obs]), a=np.array([o.a for o in obs]),
            r=np.array([o.r for o in obs]), u=np.array([o.u for o in obs]),
            pi_a=np.array([o.pi_a for o in obs]),
            feature_kind=feature_kind, standardization=standardization, oracle=oracle,
        )

    def take(self, idx) -> "Dataset":
        """Row subset that keeps the fitted standardization."""
        idx = np.asarray(idx)
        return Dataset(
            self.x[idx], self.a[idx], self.r[idx], self.u[idx], self.pi_a[idx],
            feature_kind=self.feature_kind, standardization=self.standardization,
            oracle=None if self.oracle is None else self.oracle.take(idx),
            potential=None if self.potential is None else self.potential.take(idx),
        )

    def without_certificate(self) -> "Dataset":
        """Same sample with u = 0, so the certified reward equals the proxy."""
        return replace(self, u=np.zeros_like(self.u))

    def restandardized(self, std: Standardization) -> "Dataset":
        return replace(self, standardization=std)


@dataclass(frozen=True)
class PolicyParams:
    """Linear score rule d(x) = sgn(clamp(beta . phi(x))) over a feature map."""

    beta: np.ndarray
    feature_kind: FeatureKind
    standardization: Standardization | None
    score_bound: float = 3.0

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).ravel()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "feature_kind", FeatureKind(self.feature_kind))

    @classmethod
    def for_dataset(cls, beta, ds: Dataset, score_bound: float = 3.0) -> "PolicyParams":
        return cls(beta, ds.feature_kind, ds.standardization, score_bound)

    @classmethod
    def constant(cls, arm: int, ds: Dataset) -> "PolicyParams":
        """Always-``arm`` rule; needs an intercept as last feature."""
        if ds.feature_kind is FeatureKind.IDENTITY:
            raise ValueError("constant rules need a feature map with an intercept")
        beta = np.zeros(ds.features.shape[1])
        beta[-1] = 1.0 if arm == 1 else -1.0
        return cls.for_dataset(beta, ds)

    def check_compatible(self, ds: Dataset) -> None:
        if self.feature_kind is not ds.feature_kind or self.standardization != ds.standardization:
            raise FeatureMapMismatch("policy and dataset use different feature maps")
        if self.beta.shape[0] != ds.features.shape[1]:
            raise FeatureMapMismatch("policy coefficient length does not match the features")

    def scores(self, ds: Dataset) -> np.ndarray:
        self.check_compatible(ds)
        return np.clip(ds.features @ self.beta, -self.score_bound, self.score_bound)

    def decide(self, ds: Dataset) -> np.ndarray:
        return sign_rule(self.scores(ds))


def decisions(policy, ds: Dataset) -> np.ndarray:
    """Arms chosen on ``ds`` by a PolicyParams or an explicit arm array."""
    if isinstance(policy, PolicyParams):
        return policy.decide(ds)
    arms = np.asarray(policy, dtype=int).ravel()
    if arms.shape[0] != ds.n or not np.all(np.isin(arms, (-1, 1))):
        raise ValueError("explicit decisions must be a +/-1 vector of dataset length")
    return arms


# ---------------------------------------------------------------------------
# CSV schema

ORACLE_COLUMNS = (
    "r_star", "mu_star_pos", "mu_star_neg", "mu_proxy_pos", "mu_proxy_neg",
    "mu_lower_pos", "mu_lower_neg", "pi_plus",
)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_dataset_csv(ds: Dataset, path) -> None:
    """Export with header x_1..x_p, a, r, u, pi_a and optional oracle columns."""
    p = ds.x.shape[1]
    header = [f"x_{j}" for j in range(1, p + 1)] + ["a", "r", "u", "pi_a"]
    orc = ds.oracle
    if orc is not None:
        header += list(ORACLE_COLUMNS)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n):
            row = [_fmt(v) for v in ds.x[i]] + [str(int(ds.a[i])), _fmt(ds.r[i]), _fmt(ds.u[i]), _fmt(ds.pi_a[i])]
            if orc is not None:
                lower = orc.mu_lower[i] if orc.mu_lower is not None else (math.nan, math.nan)
                row += [_fmt(orc.r_star[i]), _fmt(orc.mu_star[i, 0]), _fmt(orc.mu_star[i, 1]),
                        _fmt(orc.mu_proxy[i, 0]), _fmt(orc.mu_proxy[i, 1]),
                        _fmt(lower[0]), _fmt(lower[1]), _fmt(orc.pi_plus[i])]
            w.writerow(row)


def read_dataset_csv(path, feature_kind=FeatureKind.LINEAR_INTERCEPT, standardization=None) -> Dataset:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    header, body = rows[0], rows[1:]
    xcols = [j for j, h in enumerate(header) if h.startswith("x_")]
    col = {h: j for j, h in enumerate(header)}
    for req in ("a", "r", "u", "pi_a"):
        if req not in col:
            raise ValueError(f"{path}: missing column {req!r}")
    data = np.array(body, dtype=float)
    oracle = None
    if all(c in col for c in ORACLE_COLUMNS):
        g = lambda c: data[:, col[c]]
        lower = np.column_stack([g("mu_lower_pos"), g("mu_lower_neg")])
        oracle = OracleInfo(
            r_star=g("r_star"),
            mu_star=np.column_stack([g("mu_star_pos"), g("mu_star_neg")]),
            mu_proxy=np.column_stack([g("mu_proxy_pos"), g("mu_proxy_neg")]),
            mu_lower=None if np.all(np.isnan(lower)) else lower,
            pi_plus=g("pi_plus"),
        )
    return Dataset(
        x=data[:, xcols], a=data[:, col["a"]].astype(int), r=data[:, col["r"]],
        u=data[:, col["u"]], pi_a=data[:, col["pi_a"]],
        feature_kind=feature_kind, standardization=standardization, oracle=oracle,
    )

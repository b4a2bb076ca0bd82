"""Regrets, value gaps, certificate diagnostics and the metrics CSV schema."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from .data import Dataset, decisions

CSV_FIELDS = (
    "scenario", "rho", "n", "replicate", "method", "reward_family",
    "target_regret", "robust_regret", "proxy_target_gap", "target_certified_gap",
    "e_u", "clip_rate", "valid_rate", "lcb", "runtime_seconds",
)


@dataclass(frozen=True)
class MetricsRecord:
    scenario: int
    rho: float
    n: int
    replicate: int
    method: str
    reward_family: str
    target_regret: float
    robust_regret: float
    proxy_target_gap: float
    target_certified_gap: float
    e_u: float
    clip_rate: float
    valid_rate: float
    lcb: float | None = None
    runtime_seconds: float = 0.0

    def sort_key(self):
        return (self.scenario, self.rho, self.n, self.replicate, self.method, self.reward_family)

    def to_row(self) -> list[str]:
        out = []
        for name in CSV_FIELDS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_row(cls, row: dict) -> "MetricsRecord":
        kw = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.name in ("scenario", "n", "replicate"):
                kw[f.name] = int(raw)
            elif f.name in ("method", "reward_family"):
                kw[f.name] = raw
            elif f.name == "lcb" and raw == "":
                kw[f.name] = None
            else:
                kw[f.name] = float(raw)
        return cls(**kw)


def _arm_mean(mu: np.ndarray, d: np.ndarray) -> float:
    return float(np.mean(np.where(d == 1, mu[:, 0], mu[:, 1])))


def _require_oracle(test: Dataset):
    if test.oracle is None:
        raise ValueError("test sample has no oracle fields")
    return test.oracle


def regrets(policy, test: Dataset) -> tuple[float, float]:
    """(target regret, robust regret) against the pointwise oracle rules."""
    orc = _require_oracle(test)
    if orc.mu_lower is None:
        raise ValueError("certified oracle means were not computed")
    d = decisions(policy, test)
    target = float(np.mean(orc.mu_star.max(axis=1))) - _arm_mean(orc.mu_star, d)
    robust = float(np.mean(orc.mu_lower.max(axis=1))) - _arm_mean(orc.mu_lower, d)
    return target, robust


def gaps(policy, test: Dataset) -> tuple[float, float]:
    """(proxy - target, target - certified) oracle values of the policy."""
    orc = _require_oracle(test)
    if orc.mu_lower is None:
        raise ValueError("certified oracle means were not computed")
    d = decisions(policy, test)
    v_proxy = _arm_mean(orc.mu_proxy, d)
    v_target = _arm_mean(orc.mu_star, d)
    v_cert = _arm_mean(orc.mu_lower, d)
    return v_proxy - v_target, v_target - v_cert


def certificate_diagnostics(ds: Dataset, test: Dataset | None = None) -> tuple[float, float, float]:
    """(E[U], P(U > R)) on the learning sample and the validity rate on ``test``.

    Validity needs both potential outcomes; without a test sample carrying
    them the rate is NaN.
    """
    e_u = float(np.mean(ds.u))
    clip_rate = float(np.mean(ds.u > ds.r))
    if test is None or test.potential is None:
        if test is not None:
            raise ValueError("validity needs potential outcomes on the test sample")
        return e_u, clip_rate, math.nan
    po = test.potential
    ok = np.all(po.r - po.r_star <= po.u, axis=1)
    return e_u, clip_rate, float(np.mean(ok))


def write_records(records: Iterable[MetricsRecord], path, header_comments: Iterable[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in records:
            w.writerow(rec.to_row())


def read_records(path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_FIELDS:
        raise ValueError(f"{path}: header does not match the metrics schema")
    return [MetricsRecord.from_row(row) for row in reader]

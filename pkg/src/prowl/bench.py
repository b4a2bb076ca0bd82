"""Sweeps, certificate diagnostics and the split-free ablation."""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .learners import LearnerConfig, deploy, owl_fit, prowl_fit, qlearn_fit, rwl_fit
from .metrics import CSV_FIELDS, MetricsRecord, certificate_diagnostics, gaps, regrets, write_records
from .pacbayes import BoundConfig
from .simulate import EPSILON, ScenarioConfig, simulate

MODES = ("rho", "n", "diagnostics", "ablation")
DEFAULT_RHO_GRID = tuple(0.25 * k for k in range(9))
DEFAULT_N_GRID = (100, 200, 500, 1000, 2000)
DELTA = 0.1

# (method, reward family) pairs; family names follow the CSV vocabulary.
ALL_METHODS = (
    ("prowl", "underline-R"), ("prowl-u0", "R"),
    ("owl", "R"), ("owl", "underline-R"),
    ("rwl", "R"), ("rwl", "underline-R"),
    ("qlearn", "R"), ("qlearn", "underline-R"),
)
ABLATION_METHODS = (("prowl", "underline-R"), ("prowl-split", "underline-R"))
METHOD_NAMES = ("prowl", "prowl-u0", "prowl-split", "owl", "rwl", "qlearn")
_FAMILY_FIELD = {"R": "proxy", "underline-R": "certified"}
_BASELINES = {"owl": owl_fit, "rwl": rwl_fit, "qlearn": qlearn_fit}


def parse_methods(spec) -> tuple[tuple[str, str], ...]:
    """Accept "all", bare names ("owl" means both families) or "name:family"."""
    if spec is None or spec == "all":
        return ALL_METHODS
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    out = []
    for item in items:
        if isinstance(item, tuple):
            name, fam = item
        else:
            item = item.strip()
            name, _, fam = item.partition(":")
        if name not in METHOD_NAMES:
            raise ValueError(f"unknown method {name!r}")
        if fam:
            if fam not in _FAMILY_FIELD:
                raise ValueError(f"unknown reward family {fam!r}")
            out.append((name, fam))
        elif name in _BASELINES:
            out.extend([(name, "R"), (name, "underline-R")])
        else:
            out.append((name, "R" if name == "prowl-u0" else "underline-R"))
    return tuple(dict.fromkeys(out))


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "rho"
    scenario: int = 1
    rho_grid: tuple = DEFAULT_RHO_GRID
    n_grid: tuple = DEFAULT_N_GRID
    fixed_n: int = 200
    fixed_rho: float = 1.5
    reps: int = 30
    seed: int = 0
    methods: tuple = ALL_METHODS
    out_path: str = "results.csv"
    n_test: int = 10000
    diagnostics_n: int = 1000
    budget_seconds: float | None = None
    learner: LearnerConfig = field(default_factory=LearnerConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.scenario not in (1, 2):
            raise ValueError("scenario must be 1 or 2")
        if not self.rho_grid or not self.n_grid:
            raise ValueError("grids must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        object.__setattr__(self, "methods", parse_methods(self.methods))
        if self.mode == "ablation":
            object.__setattr__(self, "methods", ABLATION_METHODS)

    @property
    def epsilon(self) -> float:
        return EPSILON[self.scenario]

    def grid(self) -> list[tuple[float, int]]:
        """(rho, n) grid points for the mode."""
        if self.mode == "rho":
            return [(float(r), self.fixed_n) for r in self.rho_grid]
        if self.mode == "n":
            return [(self.fixed_rho, int(n)) for n in self.n_grid]
        if self.mode == "ablation":
            return [(self.fixed_rho, self.fixed_n)]
        return [(float(r), self.diagnostics_n) for r in self.rho_grid]

    def header(self) -> list[str]:
        return [
            f"prowl-bench mode={self.mode} scenario={self.scenario} reps={self.reps} seed={self.seed}",
            f"epsilon={self.epsilon} delta={DELTA} n_test={self.n_test}",
            "per-replicate seed = seed + replicate index",
        ]


def _fit_method(name: str, family: str, train, cfg: SweepConfig, seed: int):
    """Returns (policy, lcb)."""
    bound = BoundConfig(epsilon=cfg.epsilon, delta=DELTA)
    if name in ("prowl", "prowl-u0", "prowl-split"):
        ds = train.without_certificate() if name == "prowl-u0" else train
        learner = replace(cfg.learner, split_free=False) if name == "prowl-split" else cfg.learner
        fit = prowl_fit(ds, learner, bound, seed=seed)
        return deploy(fit, "map"), fit.lcb_star
    return _BASELINES[name](train, cfg.learner, reward_field=_FAMILY_FIELD[family], seed=seed), None


def _flagged(scenario, rho, n, rep, name, family, elapsed) -> MetricsRecord:
    nan = math.nan
    return MetricsRecord(scenario, rho, n, rep, name, family, nan, nan, nan, nan, nan, nan, nan, nan, elapsed)


def run_cell(cfg: SweepConfig, rho: float, n: int, rep: int) -> list[MetricsRecord]:
    """All methods on one (grid point, replicate). Past the budget, remaining
    methods are reported as flagged rows with NaN metrics."""
    seed = cfg.seed + rep
    start = time.perf_counter()
    train, test = simulate(ScenarioConfig(cfg.scenario, n, rho, seed, n_test=cfg.n_test))
    e_u, clip_rate, valid = certificate_diagnostics(train, test)
    rows = []
    for name, family in cfg.methods:
        spent = time.perf_counter() - start
        if cfg.budget_seconds is not None and spent > cfg.budget_seconds:
            rows.append(_flagged(cfg.scenario, rho, n, rep, name, family, spent))
            continue
        t0 = time.perf_counter()
        policy, lcb = _fit_method(name, family, train, cfg, seed)
        elapsed = time.perf_counter() - t0
        tr, rr = regrets(policy, test)
        pg, cg = gaps(policy, test)
        rows.append(MetricsRecord(cfg.scenario, rho, n, rep, name, family, tr, rr, pg, cg,
                                  e_u, clip_rate, valid, lcb, elapsed))
    return rows


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def summarize(records) -> list[dict]:
    cells: dict[tuple, list[MetricsRecord]] = {}
    for rec in records:
        cells.setdefault((rec.scenario, rec.rho, rec.n, rec.method, rec.reward_family), []).append(rec)
    out = []
    for key in sorted(cells):
        group = cells[key]
        row = dict(zip(("scenario", "rho", "n", "method", "reward_family"), key))
        row["reps"] = len(group)
        for metric in SUMMARY_METRICS:
            vals = np.array([np.nan if getattr(r, metric) is None else getattr(r, metric) for r in group], float)
            row[f"{metric}_mean"] = float(np.mean(vals))
            row[f"{metric}_se"] = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        out.append(row)
    return out


SUMMARY_METRICS = ("target_regret", "robust_regret", "proxy_target_gap", "target_certified_gap",
                   "e_u", "clip_rate", "valid_rate", "lcb", "runtime_seconds")


def summary_path(out_path) -> Path:
    p = Path(out_path)
    return p.with_name(p.stem + ".summary" + (p.suffix or ".csv"))


def _write_dicts(rows: list[dict], path, header_comments) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[MetricsRecord]:
    """Run the grid, write the per-replicate CSV and the summary CSV."""
    if cfg.mode == "diagnostics":
        raise ValueError("use run_diagnostics for diagnostics mode")
    jobs = [(cfg, rho, n, rep) for rho, n in cfg.grid() for rep in range(cfg.reps)]
    records = [r for rows in _map(run_cell, jobs, workers) for r in rows]
    records.sort(key=MetricsRecord.sort_key)
    write_records(records, cfg.out_path, cfg.header())
    _write_dicts(summarize(records), summary_path(cfg.out_path), cfg.header())
    return records


DIAGNOSTIC_FIELDS = ("scenario", "rho", "n", "reps", "e_u", "e_u_se", "clip_rate", "valid_rate")


def _diagnostic_rep(cfg: SweepConfig, rho: float, n: int, rep: int) -> tuple[float, float, float]:
    train, test = simulate(ScenarioConfig(cfg.scenario, n, rho, cfg.seed + rep, n_test=cfg.n_test),
                           with_lower=False)
    return certificate_diagnostics(train, test)


def run_diagnostics(cfg: SweepConfig, workers: int = 1) -> list[dict]:
    """Per-rho means of (E[U], Clip, Valid) over replicates, one row each."""
    grid = [(float(r), cfg.diagnostics_n) for r in cfg.rho_grid]
    jobs = [(cfg, rho, n, rep) for rho, n in grid for rep in range(cfg.reps)]
    vals = np.array(_map(_diagnostic_rep, jobs, workers)).reshape(len(grid), cfg.reps, 3)
    rows = []
    for (rho, n), block in zip(grid, vals):
        se = float(np.std(block[:, 0], ddof=1) / math.sqrt(cfg.reps)) if cfg.reps > 1 else 0.0
        rows.append({"scenario": cfg.scenario, "rho": rho, "n": n, "reps": cfg.reps,
                     "e_u": float(block[:, 0].mean()), "e_u_se": se,
                     "clip_rate": float(block[:, 1].mean()), "valid_rate": float(block[:, 2].mean())})
    _write_dicts(rows, cfg.out_path, cfg.header())
    return rows


__all__ = [
    "ABLATION_METHODS", "ALL_METHODS", "CSV_FIELDS", "DIAGNOSTIC_FIELDS", "SweepConfig",
    "parse_methods", "run_cell", "run_diagnostics", "run_sweep", "summarize", "summary_path",
]

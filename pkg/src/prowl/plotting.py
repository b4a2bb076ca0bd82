"""Static SVG line plots from sweep and diagnostics CSVs."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import read_records  # noqa: E402

PLOT_KINDS = {
    "regret": ("target_regret", "robust_regret"),
    "gaps": ("proxy_target_gap", "target_certified_gap"),
    "diagnostics": ("e_u", "clip_rate", "valid_rate"),
}
_RC = {"svg.hashsalt": "prowl", "svg.fonttype": "none", "path.simplify": False}


def _read_diagnostics(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"rho", "e_u", "clip_rate", "valid_rate"} <= set(reader.fieldnames):
        raise ValueError(f"{path}: not a diagnostics table")
    return [{k: float(v) for k, v in row.items()} for row in reader]


def _series_from_records(records, metric: str):
    """{label: sorted [(x, mean)]} with x = rho or n, whichever varies."""
    xs_rho = {r.rho for r in records}
    axis = "rho" if len(xs_rho) > 1 or len({r.n for r in records}) == 1 else "n"
    acc: dict[str, dict[float, list[float]]] = {}
    for r in records:
        label = f"{r.method} ({r.reward_family})"
        acc.setdefault(label, {}).setdefault(float(getattr(r, axis)), []).append(getattr(r, metric))
    series = {lab: sorted((x, sum(v) / len(v)) for x, v in pts.items()) for lab, pts in sorted(acc.items())}
    return axis, series


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_plots(csv_path, kind: str, out_dir=None) -> list[Path]:
    """Write one SVG per metric of ``kind`` next to the CSV (or in out_dir).

    Each line carries gid "series-<label>" so the output can be inspected
    structurally. Raises on an empty data section without writing anything.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {sorted(PLOT_KINDS)}")
    csv_path = Path(csv_path)
    out_dir = csv_path.parent if out_dir is None else Path(out_dir)
    if kind == "diagnostics":
        rows = _read_diagnostics(csv_path)
        if not rows:
            raise ValueError(f"{csv_path}: no data rows")
        plans = []
        for metric in PLOT_KINDS[kind]:
            by_sc: dict[str, list] = {}
            for row in rows:
                by_sc.setdefault(f"scenario {int(row['scenario'])}", []).append((row["rho"], row[metric]))
            plans.append((metric, "rho", {k: sorted(v) for k, v in sorted(by_sc.items())}))
    else:
        records = read_records(csv_path)
        if not records:
            raise ValueError(f"{csv_path}: no data rows")
        plans = [(m, *_series_from_records(records, m)) for m in PLOT_KINDS[kind]]

    written = []
    with plt.rc_context(_RC):
        for metric, axis, series in plans:
            fig, ax = plt.subplots(figsize=(6, 4))
            for label, pts in series.items():
                line, = ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
                line.set_gid("series-" + label.replace(" ", "_").replace("(", "").replace(")", ""))
            ax.set_xlabel(axis)
            ax.set_ylabel(metric.replace("_", " "))
            ax.legend(fontsize="small")
            fig.tight_layout()
            path = out_dir / f"{csv_path.stem}_{metric}.svg"
            _save(fig, path)
            written.append(path)
    return written

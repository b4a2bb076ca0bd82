"""prowl-bench command line entry point."""
from __future__ import annotations

import argparse
import json
import sys

from .bench import SweepConfig, run_diagnostics, run_sweep, summary_path
from .learners import LearnerConfig, deploy, prowl_fit
from .pacbayes import BoundConfig, bound_report, write_bound_report
from .simulate import EPSILON, ScenarioConfig, simulate


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def read_config(path) -> dict[str, str]:
    """Plain key=value lines; blank lines and # comments are ignored."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--scenario", type=int, choices=(1, 2), default=1)
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho-grid", type=_floats, default=None, help="comma-separated")
    p.add_argument("--n-test", type=int, default=10000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prowl-bench", description="PROWL simulation benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="rho sweep, n sweep or split-free ablation")
    _add_common(sw)
    sw.add_argument("--mode", choices=("rho", "n", "ablation"), default="rho")
    sw.add_argument("--n-grid", type=_ints, default=None)
    sw.add_argument("--fixed-n", type=int, default=200)
    sw.add_argument("--fixed-rho", type=float, default=1.5)
    sw.add_argument("--methods", default="all", help='"all" or e.g. prowl,prowl-u0,qlearn:R')
    sw.add_argument("--budget-seconds", type=float, default=None)
    sw.add_argument("--plot", action="store_true", help="also write regret and gap SVGs")

    dg = sub.add_parser("diagnostics", help="certificate diagnostics table")
    _add_common(dg)
    dg.add_argument("--n", type=int, default=1000)
    dg.add_argument("--plot", action="store_true")

    pl = sub.add_parser("plot", help="SVG line plots from a results CSV")
    pl.add_argument("--config")
    pl.add_argument("--in", dest="in_path", required=True)
    pl.add_argument("--kind", choices=("regret", "gaps", "diagnostics"), default="regret")
    pl.add_argument("--out-dir", default=None)

    ft = sub.add_parser("fit", help="simulate one sample, fit PROWL, print the fit as JSON")
    ft.add_argument("--config")
    ft.add_argument("--scenario", type=int, choices=(1, 2), default=1)
    ft.add_argument("--n", type=int, default=200)
    ft.add_argument("--rho", type=float, default=1.0)
    ft.add_argument("--seed", type=int, default=0)
    ft.add_argument("--split", action="store_true", help="use the honest half-sample split")
    ft.add_argument("--out", default=None, help="write the JSON here instead of stdout")
    ft.add_argument("--bound-report", default=None, help="CSV of the LCB ingredients per gamma")

    sm = sub.add_parser("simulate", help="write one simulated learning sample as CSV")
    sm.add_argument("--config")
    sm.add_argument("--scenario", type=int, choices=(1, 2), default=1)
    sm.add_argument("--n", type=int, default=200)
    sm.add_argument("--rho", type=float, default=1.0)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--out", required=True)
    parser.set_defaults(_subparsers={"sweep": sw, "diagnostics": dg, "plot": pl, "fit": ft, "simulate": sm})
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = args._subparsers[args.command]
        values = read_config(args.config)
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in known or key in ("help", "config"):
                raise ValueError(f"unknown config key {key!r}")
            action = known[key]
            if action.const is True and action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(raw) if action.type else raw
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _sweep_config(args, mode: str) -> SweepConfig:
    kw = dict(mode=mode, scenario=args.scenario, reps=args.reps, seed=args.seed,
              out_path=args.out, n_test=args.n_test)
    if args.rho_grid:
        kw["rho_grid"] = args.rho_grid
    if mode == "diagnostics":
        kw["diagnostics_n"] = args.n
    else:
        kw.update(fixed_n=args.fixed_n, fixed_rho=args.fixed_rho, methods=args.methods,
                  budget_seconds=args.budget_seconds)
        if args.n_grid:
            kw["n_grid"] = args.n_grid
    return SweepConfig(**kw)


def _run(args) -> None:
    from .plotting import emit_plots

    if args.command == "sweep":
        cfg = _sweep_config(args, args.mode)
        records = run_sweep(cfg, workers=args.workers)
        print(f"wrote {len(records)} rows to {cfg.out_path} and {summary_path(cfg.out_path)}")
        if args.plot:
            for kind in ("regret", "gaps"):
                emit_plots(cfg.out_path, kind)
    elif args.command == "diagnostics":
        cfg = _sweep_config(args, "diagnostics")
        rows = run_diagnostics(cfg, workers=args.workers)
        for row in rows:
            print(f"rho={row['rho']:.2f}  E[U]={row['e_u']:.3f}  Clip={row['clip_rate']:.3f}  "
                  f"Valid={row['valid_rate']:.3f}")
        if args.plot:
            emit_plots(cfg.out_path, "diagnostics")
    elif args.command == "plot":
        for path in emit_plots(args.in_path, args.kind, args.out_dir):
            print(path)
    elif args.command == "fit":
        train, test = simulate(ScenarioConfig(args.scenario, args.n, args.rho, args.seed, n_test=1),
                               with_lower=False)
        bound = BoundConfig(epsilon=EPSILON[args.scenario])
        fit = prowl_fit(train, LearnerConfig(split_free=not args.split), bound, seed=args.seed)
        doc = fit.to_dict()
        doc["map_beta"] = deploy(fit, "map").beta.tolist()
        if args.bound_report:
            rows = bound_report(fit.library, fit.posterior, bound.gamma_grid, fit.n, bound)
            write_bound_report(rows, args.bound_report)
        text = json.dumps(doc, sort_keys=True, indent=1)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
            print(f"lcb={fit.lcb_star:.6f} gamma={fit.gamma_star} wrote {args.out}")
        else:
            print(text)
    elif args.command == "simulate":
        from .data import write_dataset_csv

        train, _ = simulate(ScenarioConfig(args.scenario, args.n, args.rho, args.seed, n_test=1))
        write_dataset_csv(train, args.out)
        print(f"wrote {train.n} rows to {args.out}")


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        _run(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, ValueError, KeyError, FloatingPointError) as exc:
        print(f"prowl-bench: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

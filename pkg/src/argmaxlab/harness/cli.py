"""Command line interface.

Every subcommand reads a JSON experiment config, applies the override flags,
runs it and writes ``report.json`` and ``tables.csv`` into ``--out``. The exit
status is 0 iff every acceptance gate of the experiment passes, 1 if a gate
fails and 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ArgmaxLabError, ConfigurationError
from .config import ExperimentConfig
from .experiments import Report, merge_reports, run_config

SUBCOMMAND_KINDS = {
    "simulate": ("simulate",),
    "verify-identity": ("identity-1d", "identity-nd", "gradient-identity"),
    "verify-derivative": ("derivative",),
    "verify-bridge": ("bridge-check",),
    "levy-cases": ("levy-cases",),
    "lpp-geodesic": ("lpp-geodesic",),
}


def _add_run_flags(p, config_required=True):
    p.add_argument("--config", required=config_required, metavar="PATH",
                   help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the experiment seed")
    p.add_argument("--replicates", type=int, help="override the replicate count N")
    p.add_argument("--grid-n", type=int, dest="grid_n",
                   help="override the grid resolution (subintervals or simplex m)")
    p.add_argument("--out", metavar="DIR", help="output directory (default: config "
                   "output.dir or ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argmaxlab",
        description="Simulate random paths, locate their maxima and check argmax "
                    "identities by Monte Carlo.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_KINDS:
        p = sub.add_parser(name, help=f"run a {'/'.join(SUBCOMMAND_KINDS[name])} experiment")
        _add_run_flags(p, config_required=(name != "lpp-geodesic"))
        if name == "lpp-geodesic":
            p.add_argument("--stages", type=int, help="number of stages n (1..4)")
    m = sub.add_parser("report-merge", help="pool reports from runs with disjoint seeds")
    m.add_argument("reports", nargs="+", metavar="REPORT", help="report.json files")
    m.add_argument("--out", metavar="DIR", help="output directory")
    return parser


def _load(args, command) -> ExperimentConfig:
    if args.config is None:
        cfg = ExperimentConfig.from_dict({"kind": "lpp-geodesic"})
    else:
        cfg = ExperimentConfig.load(args.config)
    allowed = SUBCOMMAND_KINDS[command]
    if cfg.kind not in allowed:
        raise ConfigurationError(f"subcommand {command} runs kinds {list(allowed)}, "
                                 f"config has kind {cfg.kind!r}", "kind")
    if getattr(args, "stages", None) is not None:
        cfg.lpp = dict(cfg.lpp or {}, stages=args.stages)
    return cfg.with_overrides(args.seed, args.replicates, args.grid_n)


def _print_summary(rep: Report, out: Path, stream):
    print(f"{rep.kind} '{rep.name}': wrote {out / 'report.json'}", file=stream)
    shown = rep.identities
    if len(shown) > 12:
        worst = max(shown, key=lambda r: abs(r.z))
        print(f"  {len(shown)} comparisons; largest |z| = {abs(worst.z):.3f} ({worst.name}); "
              "see tables.csv", file=stream)
        shown = []
    for r in shown:
        print(f"  {r.name}: lhs={r.lhs:.6g} (se {r.lhs_se:.2g})  rhs={r.rhs:.6g} "
              f"(se {r.rhs_se:.2g})  z={r.z:+.3f}  n={r.n}", file=stream)
    for k, v in rep.gates.items():
        print(f"  gate {k}: {'PASS' if v else 'FAIL'}", file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report-merge":
            reports = []
            for p in args.reports:
                try:
                    reports.append(Report.from_dict(json.loads(Path(p).read_text())))
                except (OSError, json.JSONDecodeError, KeyError) as exc:
                    raise ConfigurationError(f"cannot read report {p}: {exc}", "reports")
            rep = merge_reports(reports)
            out = Path(args.out or "out")
        else:
            cfg = _load(args, args.command)
            rep = run_config(cfg)
            out = Path(args.out or cfg.output_dir or "out")
        rep.write(out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ArgmaxLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_summary(rep, out, sys.stdout)
    return 0 if rep.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

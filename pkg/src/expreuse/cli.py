"""Command line entry point.

`expreuse <scenario>` runs one study and writes its CSV plus PNG figures
to the output directory; `expreuse report` runs all of them. `expreuse
serve` starts the HTTP service. Scenario commands exit nonzero when any
check fails.
"""

from __future__ import annotations

import argparse
import sys

from .harness import SCENARIOS, run_scenario


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--out", default="results", help="output directory for CSVs and figures")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expreuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rq1-battery", help="retrieval-threshold ladder over a sweep grid")
    _add_common(p)
    p.add_argument("--repetitions", type=int, default=3)

    p = sub.add_parser("rq1-train", help="reuse ratio over a randomized query stream")
    _add_common(p)
    p.add_argument("--queries", type=int, default=5000)
    p.add_argument("--window", type=int, default=500)

    p = sub.add_parser("rq2-battery", help="direct-reuse saturation over overlapping sweeps")
    _add_common(p)
    p.add_argument("--queries", type=int, default=40)

    p = sub.add_parser("rq2-train", help="store growth and latency across storage configs")
    _add_common(p)
    p.add_argument("--queries", type=int, default=2000)
    p.add_argument("--sample-every", type=int, default=100)

    p = sub.add_parser("report", help="run every scenario")
    _add_common(p)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", default=None, help="YAML config file")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--store-dir", default=None, help="directory for the persistent store")
    p.add_argument("--console-dir", default=None, help="static web console dir, served at /console")
    return parser


def _scenario_kwargs(args: argparse.Namespace) -> dict:
    kw = {}
    if getattr(args, "repetitions", None) is not None:
        kw["repetitions"] = args.repetitions
    if getattr(args, "queries", None) is not None:
        kw["n_queries"] = args.queries
    if getattr(args, "window", None) is not None:
        kw["window"] = args.window
    if getattr(args, "sample_every", None) is not None:
        kw["sample_every"] = args.sample_every
    return kw


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        from .config import load_config
        from .service import run

        config = load_config(args.config)
        if args.host is not None:
            config.host = args.host
        if args.port is not None:
            config.port = args.port
        if args.store_dir is not None:
            config.store_dir = args.store_dir
        if args.console_dir is not None:
            config.console_dir = args.console_dir
        run(config)
        return 0

    names = list(SCENARIOS) if args.command == "report" else [args.command]
    ok = True
    for name in names:
        kw = _scenario_kwargs(args) if args.command != "report" else {}
        report = run_scenario(
            name, seed=args.seed, out_dir=args.out, figures=not args.no_figures, **kw
        )
        print(report.summary())
        for fig in report.figure_paths:
            print(f"figure: {fig}")
        print()
        ok = ok and report.ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

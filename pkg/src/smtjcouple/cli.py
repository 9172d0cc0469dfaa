"""Command-line entry point: ``smtjcouple {simulate,sweep,analyze,anneal,presets}``."""

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import experiments
from .config import load_spec
from .device import load_presets
from .errors import (
    BreakdownError,
    ConfigError,
    InvalidArgumentError,
    InvalidConfigurationError,
    NumericalFailureError,
    UnsupportedConfigurationError,
)

log = logging.getLogger("smtjcouple")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREAKDOWN = 3
EXIT_NUMERICAL = 4


def _parser():
    parser = argparse.ArgumentParser(prog="smtjcouple", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False, fmt=True):
        p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--seed", type=int, help="override the configured master seed")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        if workers:
            p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv",
                           help="table format for sweep/analyze outputs")
        return p

    common(sub.add_parser("simulate", help="single seeded simulation"), fmt=False)
    common(sub.add_parser("sweep", help="correlation and dwell times across gains"), workers=True)
    common(sub.add_parser("analyze", help="Markov-model predictions"))
    common(sub.add_parser("anneal", help="run a gain schedule"), fmt=False)
    p = sub.add_parser("presets", help="list bundled device presets")
    p.add_argument("--config", help="alternative presets file")
    p.add_argument("--out", help="write presets JSON into this directory")
    return parser


def _presets(args):
    presets = load_presets(args.config)
    payload = {
        name: {**p.to_dict(), "tau_balance_s": p.tau_balance, "slope_b_per_a": p.slope_b}
        for name, p in presets.items()
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "presets.json").write_text(text + "\n", encoding="utf-8")
    print(text)


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            _presets(args)
            return EXIT_OK
        spec = load_spec(args.config)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        out = args.out or spec.out_dir
        if args.command == "simulate":
            summary = experiments.run_simulate(spec, out)
            rho = summary.get("pearson", {}).get("rho")
            print(f"simulate: wrote {out} (pearson={rho})")
        elif args.command == "sweep":
            summary = experiments.run_sweep(spec, out, workers=args.workers, fmt=args.format)
            print(f"sweep: {len(summary['gains'])} gains written to {out}")
        elif args.command == "analyze":
            payload = experiments.run_analyze(spec, out, fmt=args.format)
            print(f"analyze: {len(payload['points'])} gains written to {out}")
        elif args.command == "anneal":
            payload = experiments.run_anneal(spec, out)
            print(f"anneal: final dominant configs {payload['dominant_configs']} written to {out}")
    except (ConfigError, InvalidConfigurationError, InvalidArgumentError,
            UnsupportedConfigurationError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BreakdownError as exc:
        print(f"breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

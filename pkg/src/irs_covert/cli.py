"""Command-line entry point: detect-sweep, covert-rate, validate, reproduce."""
from __future__ import annotations

import argparse
import sys

import yaml

from .harness.config import ConfigError, build_config
from .harness.experiments import ALIASES, PRESETS, reproduce, resolve_figure, run_experiment
from .harness.output import VALIDATE_COLUMNS, write
from .harness.validate import run_validation

_DEFAULT_RATE = dict(kind="rate", sweep="p_a_max_dbm", grid=(15.0, 20.0, 25.0, 30.0, 35.0))


def _read_mapping(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a flat mapping", ["<root>"])
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError("nested values are not allowed", nested)
    return data


def _common(p, trials_help="trial count"):
    p.add_argument("--config", help="flat YAML configuration file")
    p.add_argument("--seed", type=int, help="base seed (non-negative integer)")
    p.add_argument("--trials", type=int, help=trials_help)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irs-covert",
                                     description="IRS-assisted NOMA covert communication experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("detect-sweep", help="closed-form and Monte-Carlo minimum average DEP sweep")
    _common(p, "Monte-Carlo trials per grid point")
    p = sub.add_parser("covert-rate", help="covert rate of the proposed scheme and benchmarks")
    _common(p, "channel realisations per grid point")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p = sub.add_parser("validate", help="run every oracle and statistical check")
    _common(p, "Monte-Carlo trials for the DEP cross-check (default 10000)")
    p = sub.add_parser("reproduce", help="run a figure preset")
    p.add_argument("figure", nargs="?", help="figure id (fig2..fig10) or alias")
    p.add_argument("--list", action="store_true", help="list figure ids and exit")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _common(p, "trials per grid point (overrides the preset)")
    return parser


def _overrides(args) -> dict:
    return {k: getattr(args, k) for k in ("seed", "trials") if getattr(args, k, None) is not None}


def _run(args, out) -> int:
    fmt = args.format
    if args.command == "validate":
        cfg = _read_mapping(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        trials = args.trials if args.trials is not None else int(cfg.get("trials", 10_000))
        rows = run_validation(seed=seed, trials=trials)
        write(rows, args.out, VALIDATE_COLUMNS, fmt or "csv", stream=out)
        return 0 if all(r["passed"] for r in rows) else 1

    if args.command == "reproduce":
        if args.list or not args.figure:
            for key, (desc, _) in PRESETS.items():
                aliases = ", ".join(a for a, v in ALIASES.items() if v == key)
                out.write(f"{key:6s} {desc} [{aliases}]\n")
            return 0 if args.list else 2
        mapping = _read_mapping(args.config)
        mapping.update(_overrides(args))
        rows = reproduce(resolve_figure(args.figure), jobs=args.jobs, **mapping)
        write(rows, args.out, fmt=fmt or mapping.get("format", "csv"), stream=out)
        return 0

    mapping = {} if args.command == "detect-sweep" else dict(_DEFAULT_RATE)
    mapping.update(_read_mapping(args.config))
    mapping["kind"] = "detection" if args.command == "detect-sweep" else "rate"
    mapping.update(_overrides(args))
    cfg = build_config(mapping)
    rows = run_experiment(cfg, jobs=getattr(args, "jobs", 1))
    write(rows, args.out or cfg.out, fmt=fmt or cfg.format, stream=out)
    return 0


def main(argv=None, out=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if out is None else out
    try:
        return _run(args, out)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except KeyError as exc:
        sys.stderr.write(f"error: {exc.args[0]}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""``restrictlab <experiment> --config <path> [--out <dir>] [--no-cache] [--threads N]``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from .config import EXPERIMENTS, load_config
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="restrictlab",
                                 description="Run a named experiment and check its criteria.")
    ap.add_argument("experiment", help="experiment name, 'all', or 'list'")
    ap.add_argument("--config", help="YAML config (default: the bundled one)")
    ap.add_argument("--out", default="results", help="output directory (default: results)")
    ap.add_argument("--no-cache", action="store_true", help="ignore and do not write the cache")
    ap.add_argument("--cache-dir", help="cache directory (default: ~/.cache/restrictlab)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads inside experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _run_one(name: str, args) -> bool:
    cfg = load_config(args.config, name)
    rec = run(cfg, out=args.out, use_cache=not args.no_cache, threads=max(1, args.threads),
              cache_dir=args.cache_dir)
    tag = " (cached)" if rec.from_cache else ""
    print(f"{name}{tag}: {'PASS' if rec.passed else 'FAIL'}  -> {rec.csv_path}")
    for c in rec.criteria:
        print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['measured']} "
              f"(want {c['threshold']}; oracle: {c['oracle']})")
    return rec.passed


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.experiment == "list":
        print("\n".join(EXPERIMENTS))
        return 0
    if args.experiment == "all":
        if args.config:
            print("--config cannot be combined with 'all'", file=sys.stderr)
            return 2
        names = list(EXPERIMENTS)
    elif args.experiment in EXPERIMENTS:
        names = [args.experiment]
    else:
        print(f"unknown experiment {args.experiment!r}; try 'restrictlab list'", file=sys.stderr)
        return 2
    try:
        results = [_run_one(n, args) for n in names]
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line: dcweak [global flags] <command>.

Exit codes: 0 success, 1 check failure (including cache digest mismatch),
2 usage, 3 precision or rank fault.
"""
from __future__ import annotations

import argparse
import os
import sys

from .cache import CacheError, CacheStore
from .config import ConfigError, JobConfig
from .padic import RingError
from .qseries import SeriesError
from .spaces import DimensionError
from .zpmat import PrecisionError

COMMANDS = ("basis", "dc", "hecke", "local", "characters", "filtrations", "classify", "search", "demo", "selftest")

# flag name -> config key
FLAGS = {
    "p": "p", "n": "n", "r": "r", "N0": "N0", "wmax": "wmax", "e": "e", "eispoly": "eispoly",
    "cache_dir": "cache_dir", "out_dir": "out_dir", "guard": "guard", "limit_chars": "limit_chars",
    "limit_samples": "limit_samples", "limit_nodes": "limit_nodes", "limit_window": "limit_window",
    "d": "demo_d", "emax": "demo_emax", "seed": "seed",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dcweak", description="Divided-congruence Hecke algebras and eigenform filtrations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")
    ap.add_argument("--no-cache", action="store_true")
    for name in ("p", "n", "r", "N0", "wmax", "e", "guard", "seed"):
        ap.add_argument(f"--{name}", type=int)
    ap.add_argument("--eispoly", help="Eisenstein polynomial coefficients, low to high, comma separated")
    ap.add_argument("--cache-dir", dest="cache_dir")
    ap.add_argument("--out-dir", dest="out_dir")
    for name in ("chars", "samples", "nodes", "window"):
        ap.add_argument(f"--limit-{name}", dest=f"limit_{name}", type=int)
    ap.add_argument("--d", type=int, help="filtration target for demo")
    ap.add_argument("--emax", type=int, help="largest ramification index tried by demo")
    return ap


def resolve_config(args) -> JobConfig:
    cfg = JobConfig()
    if args.config:
        cfg = JobConfig.load(args.config, cfg)
    env = os.environ.get("CACHE_DIR")
    if env:
        cfg.cache_dir = env
    for flag, key in FLAGS.items():
        val = getattr(args, flag, None)
        if val is None:
            continue
        if key == "eispoly":
            val = tuple(int(c) for c in val.split(","))
        setattr(cfg, key, val)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"dcweak: error: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(cfg.to_text())
        return 0

    from .pipeline import Pipeline
    from .stages import STAGES

    try:
        cache = None
        if not args.no_cache:
            cache = CacheStore(cfg.cache_dir)
            cache.verify()
        pipe = Pipeline(cfg, cache=cache, use_cache=not args.no_cache)
    except CacheError as exc:
        print(f"dcweak: cache.digest: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "selftest":
            from .acceptance import run_all
            results = run_all(pipe)
            failed = not all(r.passed for r in results)
        else:
            STAGES[args.command](pipe)
            failed = any(not c.passed for c in pipe.checks)
            for c in pipe.checks:
                print(f"{'pass' if c.passed else 'FAIL'} {c.label} {c.detail}")
    except CacheError as exc:
        print(f"dcweak: cache.digest: {exc}", file=sys.stderr)
        return 1
    except (PrecisionError, DimensionError, RingError, SeriesError) as exc:
        pipe.check(f"{args.command}.fault", args.command, False, str(exc))
        pipe.write_checks()
        print(f"dcweak: precision/rank fault: {exc}", file=sys.stderr)
        return 3
    path = pipe.write_checks()
    print(f"checks written to {path}")
    if failed:
        bad = [c.label for c in pipe.checks if not c.passed]
        print(f"dcweak: failing checks: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

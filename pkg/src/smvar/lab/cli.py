"""``smvar`` command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, DomainTooSmallError, SolverError
from . import commands
from .config import load


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smvar", description="Schrodinger-Maxwell variational experiments")
    ap.add_argument("command", choices=sorted(commands.COMMANDS))
    ap.add_argument("--config", required=True, help="TOML experiment file")
    ap.add_argument("--seed", type=int, default=None, help="overrides solver.rng_seed")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None, help="output directory (default: outputs.dir)")
    ap.add_argument("--save-fields", default=None, metavar="DIR")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config).with_seed(args.seed)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        out = args.out or cfg.outputs.dir
        fn = commands.COMMANDS[args.command]
        kw = {} if args.command == "verify" else {"workers": args.workers}
        return fn(cfg, out, save_fields=args.save_fields, **kw)
    except (ConfigError, DomainTooSmallError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return commands.EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return commands.EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

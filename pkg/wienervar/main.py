"""
Command-line entry point: python -m wienervar.main <command> ...

Exit codes: 0 pass, 1 inequality or assertion violation, 2 configuration or
numeric error.
"""

import argparse
import sys
from typing import List, Optional

from wienervar import __version__
from wienervar.commands import COMMANDS
from wienervar.core.exceptions import EXIT_ERROR, WienerVarError
from wienervar.core.runtime import configure_logging, log_runtime_info


def nonnegative_int(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError("seed must be a nonnegative integer")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wienervar",
        description="Variational representations on Wiener space: experiments and acceptance suite",
    )
    parser.add_argument("--version", action="version", version=f"wienervar {__version__}")
    parser.add_argument("--out", default=None, help="Output directory (default: WIENERVAR_OUTPUT_DIR)")
    parser.add_argument("--seed", type=nonnegative_int, default=None, help="Override every descriptor's seed")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    log_runtime_info()
    try:
        return args.handler(args)
    except WienerVarError as e:
        print(f"❌ {type(e).__name__}: {e.detail}", file=sys.stderr)
        for key, value in e.context.items():
            print(f"   {key}: {value}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

import argparse
import logging
import time
from pathlib import Path
from typing import Optional, Union

from wienervar.core.exceptions import EXIT_OK, EXIT_VIOLATION, ConfigurationError, WienerVarError
from wienervar.schemas.record import SuiteRow, SuiteSummary
from wienervar.services.experiment_runner import experiment_runner

logger = logging.getLogger(__name__)


def reproduce_all(
    suite_dir: Union[str, Path],
    out_dir: Union[str, Path, None] = None,
    seed: Optional[int] = None,
) -> SuiteSummary:
    """
    Run every *.json descriptor of a directory in name order.

    A failing or broken config does not stop the suite; the summary exit
    code is 0 only when every experiment passed.
    """
    suite_dir = Path(suite_dir)
    configs = sorted(suite_dir.glob("*.json"))
    if not configs:
        raise ConfigurationError("no experiment descriptors found", suite_dir=str(suite_dir))

    rows = []
    for path in configs:
        started = time.perf_counter()
        try:
            record = experiment_runner.execute(path, out_dir=out_dir, seed=seed)
            failed = [c.name for c in record.checks if not c.passed]
            rows.append(
                SuiteRow(
                    config=path.name,
                    experiment_id=record.experiment_id,
                    verdict=record.verdict,
                    exit_code=record.exit_code,
                    wall_time_seconds=record.wall_time_seconds,
                    detail=", ".join(failed) or None,
                )
            )
        except WienerVarError as e:
            logger.error(f"{path.name}: {e.detail}")
            rows.append(
                SuiteRow(
                    config=path.name,
                    verdict="error",
                    exit_code=e.exit_code,
                    wall_time_seconds=time.perf_counter() - started,
                    detail=e.detail,
                )
            )
    passed = sum(r.exit_code == EXIT_OK for r in rows)
    failed = len(rows) - passed
    return SuiteSummary(rows=rows, passed=passed, failed=failed, exit_code=EXIT_OK if failed == 0 else EXIT_VIOLATION)


def register(subparsers) -> None:
    parser = subparsers.add_parser("reproduce-all", help="Run every bundled acceptance descriptor")
    parser.add_argument("suite_dir", nargs="?", default="acceptance", help="Directory of experiment JSON files")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    summary = reproduce_all(args.suite_dir, out_dir=args.out, seed=args.seed)
    print("=" * 72)
    for row in summary.rows:
        icon = "✅" if row.exit_code == EXIT_OK else "❌"
        detail = f"  ({row.detail})" if row.detail else ""
        print(f"{icon} {row.config:<40} {row.verdict:<6} {row.wall_time_seconds:8.2f}s{detail}")
    print("=" * 72)
    print(f"📊 {summary.passed} passed, {summary.failed} failed")
    return summary.exit_code

import argparse

from wienervar.services.experiment_runner import experiment_runner


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run one experiment descriptor")
    parser.add_argument("config", help="Path to the experiment JSON")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    record = experiment_runner.execute(args.config, out_dir=args.out, seed=args.seed)
    icon = "✅" if record.exit_code == 0 else "❌"
    print(f"{icon} {record.experiment_id} ({record.kind}): {record.verdict} in {record.wall_time_seconds:.2f}s")
    for check in record.checks:
        mark = "  ✅" if check.passed else "  ❌"
        observed = "" if check.observed is None else f" observed={check.observed:.6g}"
        expected = "" if check.expected is None else f" expected={check.expected:.6g}"
        print(f"{mark} {check.name}{observed}{expected}")
    return record.exit_code

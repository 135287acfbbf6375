import argparse

from wienervar.services.plot_data import emit_plot_data


def register(subparsers) -> None:
    parser = subparsers.add_parser("plot-data", help="Export one series of a run record as CSV")
    parser.add_argument("record", help="record.json or its run directory")
    parser.add_argument("--series", required=True, help="optimizer_trace, lambda_scan, g_prime, capital_g, ...")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    path = emit_plot_data(args.record, args.series, out_dir=args.out)
    print(f"📈 {path}")
    return 0

"""Command line: plots --kind witness|trajectories --in <csv...> --out <img>."""

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="render simulator CSV outputs as figures")
    parser.add_argument("--kind", required=True,
                        choices=("witness", "trajectories"))
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV")
    parser.add_argument("--out", required=True, metavar="IMG")
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    parser.add_argument("--no-threshold-label", action="store_true",
                        help="omit the threshold legend entry (witness kind)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                          output=args.out, xlabel=args.xlabel,
                          ylabel=args.ylabel,
                          annotate_threshold=not args.no_threshold_label)
        out = render(spec)
    except (SchemaError, ValueError) as exc:
        print(f"plots error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

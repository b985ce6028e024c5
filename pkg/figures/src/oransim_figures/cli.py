"""Command-line entry point: figures --csv ... --kind ... --out ..."""
from __future__ import annotations

import argparse
import sys

from .loader import SchemaError, load_results
from .render import (
    KIND_DELAY_BOX,
    KIND_OVERHEAD_BOX,
    KIND_PERFORMANCE_BARS,
    FigureSpec,
    NoDataError,
    render,
)

KIND_BY_NAME = {
    "performance": KIND_PERFORMANCE_BARS,
    "delay": KIND_DELAY_BOX,
    "overhead": KIND_OVERHEAD_BOX,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render comparison figures from a RAN sharing sweep CSV.",
    )
    parser.add_argument("--csv", required=True, help="sweep results CSV")
    parser.add_argument("--kind", required=True, choices=sorted(KIND_BY_NAME),
                        help="figure kind to render")
    parser.add_argument("--out", required=True,
                        help="output image path (png, pdf, or svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        table = load_results(args.csv)
    except (OSError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if table.empty:
        print(f"warning: {args.csv} holds no data rows; nothing to draw",
              file=sys.stderr)
        return 0
    spec = FigureSpec(input_csv_path=args.csv,
                      figure_kind=KIND_BY_NAME[args.kind],
                      output_image_path=args.out)
    try:
        path = render(spec, table)
    except NoDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

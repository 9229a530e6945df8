"""Thin command-line wrapper around :func:`sbpplots.render.render`."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, SchemaError, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sbpelastic-plots",
        description="Render figures from sbpelastic CSV outputs")
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("inputs", nargs="+", help="input CSV files")
    parser.add_argument("-o", "--output", required=True,
                        help="output image path (png/svg/pdf)")
    args = parser.parse_args(argv)
    try:
        render(PlotJob(kind=args.kind, inputs=tuple(args.inputs),
                       output=args.output))
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

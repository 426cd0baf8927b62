"""plots <plot_kind> <input_csv> [-o output_image]"""
from __future__ import annotations

import argparse
import os
import sys

from .render import PLOT_KINDS, EmptyInputError, PlotJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render decoh CSV outputs into figures."
    )
    parser.add_argument("plot_kind", choices=PLOT_KINDS)
    parser.add_argument("input_csv")
    parser.add_argument("-o", "--output-image", dest="output_image", default=None,
                        help="default: <input stem>_<plot_kind>.png")
    args = parser.parse_args(argv)
    out = args.output_image
    if out is None:
        stem, _ = os.path.splitext(args.input_csv)
        out = f"{stem}_{args.plot_kind}.png"
    try:
        meta = render(PlotJob(args.input_csv, args.plot_kind, out))
    except SchemaError as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 2
    except (EmptyInputError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for key, value in sorted(meta.items()):
        print(f"{key}={value}")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

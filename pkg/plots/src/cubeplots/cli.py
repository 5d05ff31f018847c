"""Render sweep CSVs into heatmap panels.

Usage:
    cubeplots render --csv sweep.csv --metric risk_exact \
        --panel-by alpha --out figures --format svg

Exit codes: 0 success, 2 bad arguments/CSV schema, 3 io/runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import CubeplotsError, IncompleteGrid, MissingColumn
from .heatmap import PlotSpec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubeplots",
        description="Heatmap panels from sweep CSVs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render heatmap panels")
    p.add_argument("--csv", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--panel-by", default="",
                   help="comma-separated stratification columns")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", default="svg", choices=("svg", "png"))
    p.add_argument("--vmin", type=float, default=None)
    p.add_argument("--vmax", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    panel_by = tuple(c for c in args.panel_by.split(",") if c)
    spec = PlotSpec(csv=args.csv, metric=args.metric, panel_by=panel_by,
                    out_dir=args.out, fmt=args.format,
                    vmin=args.vmin, vmax=args.vmax)
    try:
        panels = render(spec)
    except (MissingColumn, IncompleteGrid, ValueError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    except (CubeplotsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for panel in panels:
        print(f"wrote {panel.path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

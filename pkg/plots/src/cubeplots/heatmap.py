"""Heatmap panels over a (d, log2n) grid from sweep CSVs.

The input is the delimited output of a sweep run (a `#`-comment header
line, then one row per grid point x replicate).  Each panel shows the
replicate mean of one metric per (d, log2n) cell, annotated to two
decimals; one panel is produced per distinct value combination of the
panel-by columns.

SVG output is byte-deterministic: a fixed hash salt replaces matplotlib's
per-process element ids and the creation date is stripped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .errors import IncompleteGrid, MissingColumn

__all__ = ["PlotSpec", "Panel", "load_sweep", "aggregate", "render"]


@dataclass(frozen=True)
class PlotSpec:
    csv: str
    metric: str
    panel_by: Tuple[str, ...] = ()
    out_dir: str = "."
    fmt: str = "svg"  # "svg" | "png"
    vmin: Optional[float] = None
    vmax: Optional[float] = None
    cmap: str = "viridis"

    def __post_init__(self):
        if self.fmt not in ("svg", "png"):
            raise ValueError(f"unsupported format {self.fmt!r}")


@dataclass(frozen=True)
class Panel:
    """One aggregated heatmap: mean metric per (log2n, d) cell."""

    key: Tuple[Tuple[str, object], ...]  # ((column, value), ...)
    d_values: Tuple[int, ...]
    log2n_values: Tuple[int, ...]
    values: np.ndarray  # shape (len(log2n_values), len(d_values))
    path: Optional[str] = None

    def cell(self, d: int, log2n: int) -> float:
        return float(self.values[self.log2n_values.index(log2n),
                                 self.d_values.index(d)])

    @property
    def name(self) -> str:
        if not self.key:
            return "all"
        return "_".join(f"{col}={val:g}" if isinstance(val, float)
                        else f"{col}={val}" for col, val in self.key)


def load_sweep(path: str) -> pd.DataFrame:
    """Read a sweep CSV, skipping the config-hash comment line."""
    return pd.read_csv(path, comment="#")


def aggregate(df: pd.DataFrame, metric: str,
              panel_by: Sequence[str] = ()) -> List[Panel]:
    """Replicate means of `metric` on the complete (d, log2n) grid,
    one Panel per combination of panel-by values."""
    needed = ["d", "log2n", metric, *panel_by]
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise MissingColumn(f"columns not in CSV: {missing}")

    d_values = tuple(sorted(df["d"].unique()))
    log2n_values = tuple(sorted(df["log2n"].unique()))

    if panel_by:
        groups = list(df.groupby(list(panel_by), sort=True))
    else:
        groups = [((), df)]
    panels = []
    for key_vals, sub in groups:
        if not isinstance(key_vals, tuple):
            key_vals = (key_vals,)
        key = tuple(zip(panel_by, key_vals))
        means = sub.groupby(["log2n", "d"])[metric].mean()
        values = np.full((len(log2n_values), len(d_values)), np.nan)
        holes = []
        for i, ln in enumerate(log2n_values):
            for j, d in enumerate(d_values):
                try:
                    values[i, j] = means.loc[(ln, d)]
                except KeyError:
                    holes.append((int(d), int(ln)))
        if holes:
            raise IncompleteGrid(
                f"panel {dict(key)}: missing (d, log2n) cells {holes}"
            )
        panels.append(Panel(key, d_values, log2n_values, values))
    return panels


def render(spec: PlotSpec) -> List[Panel]:
    """Render one annotated heatmap image per panel; returns the panels
    with their output paths filled in."""
    df = load_sweep(spec.csv)
    panels = aggregate(df, spec.metric, spec.panel_by)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rendered = []
    for panel in panels:
        path = out_dir / f"{spec.metric}_{panel.name}.{spec.fmt}"
        _draw(panel, spec, str(path))
        rendered.append(Panel(panel.key, panel.d_values,
                              panel.log2n_values, panel.values, str(path)))
    return rendered


def _draw(panel: Panel, spec: PlotSpec, path: str) -> None:
    with plt.rc_context({"svg.hashsalt": "cubeplots"}):
        fig, ax = plt.subplots(figsize=(1.2 * len(panel.d_values) + 2,
                                        0.9 * len(panel.log2n_values) + 2))
        im = ax.imshow(panel.values, origin="lower", aspect="auto",
                       cmap=spec.cmap, vmin=spec.vmin, vmax=spec.vmax)
        ax.set_xticks(range(len(panel.d_values)),
                      [str(d) for d in panel.d_values])
        ax.set_yticks(range(len(panel.log2n_values)),
                      [str(v) for v in panel.log2n_values])
        ax.set_xlabel("d")
        ax.set_ylabel("log2(n)")
        title = spec.metric if not panel.key else (
            spec.metric + "  ("
            + ", ".join(f"{c}={v}" for c, v in panel.key) + ")"
        )
        ax.set_title(title)
        span = np.nanmax(panel.values) - np.nanmin(panel.values)
        mid = np.nanmin(panel.values) + span / 2
        for i in range(len(panel.log2n_values)):
            for j in range(len(panel.d_values)):
                v = panel.values[i, j]
                ax.text(j, i, f"{v:.2f}", ha="center", va="center",
                        color="white" if v < mid else "black",
                        fontsize=9)
        fig.colorbar(im, ax=ax)
        # stripping the Date key keeps SVG output byte-deterministic
        metadata = {"Date": None} if spec.fmt == "svg" else None
        fig.savefig(path, format=spec.fmt, metadata=metadata,
                    bbox_inches="tight")
        plt.close(fig)

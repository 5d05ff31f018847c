import numpy as np
import pandas as pd
import pytest

from cubeplots.errors import IncompleteGrid, MissingColumn
from cubeplots.heatmap import PlotSpec, aggregate, load_sweep, render


def synthetic_csv(tmp_path, rows, name="sweep.csv"):
    path = tmp_path / name
    lines = ["# config_hash=deadbeef",
             "d,log2n,alpha,replicate,risk_exact"]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def grid_rows():
    rows = []
    for d in (4, 8):
        for log2n in (5, 6):
            for rep in (0, 1):
                rows.append((d, log2n, 0.0, rep, 0.1 * d + 0.01 * rep))
    return rows


class TestAggregate:
    def test_comment_header_skipped(self, tmp_path):
        df = load_sweep(synthetic_csv(tmp_path, grid_rows()))
        assert list(df.columns)[:2] == ["d", "log2n"]
        assert len(df) == 8

    def test_replicate_means(self, tmp_path):
        df = load_sweep(synthetic_csv(tmp_path, grid_rows()))
        (panel,) = aggregate(df, "risk_exact")
        assert panel.cell(4, 5) == pytest.approx(0.405)
        assert panel.cell(8, 6) == pytest.approx(0.805)

    def test_panel_split(self, tmp_path):
        rows = grid_rows() + [
            (d, log2n, 0.02, rep, 0.5)
            for d in (4, 8) for log2n in (5, 6) for rep in (0,)
        ]
        df = load_sweep(synthetic_csv(tmp_path, rows))
        panels = aggregate(df, "risk_exact", panel_by=("alpha",))
        assert len(panels) == 2
        assert panels[0].key == (("alpha", 0.0),)
        assert panels[1].cell(4, 5) == pytest.approx(0.5)

    def test_missing_column(self, tmp_path):
        df = load_sweep(synthetic_csv(tmp_path, grid_rows()))
        with pytest.raises(MissingColumn):
            aggregate(df, "coverage_x1")

    def test_incomplete_grid_names_cell(self, tmp_path):
        rows = [r for r in grid_rows() if not (r[0] == 8 and r[1] == 6)]
        df = load_sweep(synthetic_csv(tmp_path, rows))
        with pytest.raises(IncompleteGrid, match=r"\(8, 6\)"):
            aggregate(df, "risk_exact")


class TestRender:
    def test_single_panel_file(self, tmp_path):
        csv = synthetic_csv(tmp_path, grid_rows())
        spec = PlotSpec(csv=csv, metric="risk_exact",
                        out_dir=str(tmp_path / "out"))
        (panel,) = render(spec)
        assert panel.path.endswith("risk_exact_all.svg")
        text = (tmp_path / "out" / "risk_exact_all.svg").read_text()
        # all four annotated cell means appear to two decimals
        for val in ("0.41", "0.81"):
            assert val in text

    def test_two_panels_for_alpha(self, tmp_path):
        rows = grid_rows() + [
            (d, log2n, 0.02, 0, 0.5)
            for d in (4, 8) for log2n in (5, 6)
        ]
        csv = synthetic_csv(tmp_path, rows)
        spec = PlotSpec(csv=csv, metric="risk_exact", panel_by=("alpha",),
                        out_dir=str(tmp_path / "out"))
        panels = render(spec)
        assert len(panels) == 2
        names = sorted(p.path.split("/")[-1] for p in panels)
        assert names == ["risk_exact_alpha=0.02.svg",
                         "risk_exact_alpha=0.svg"]

    def test_svg_deterministic(self, tmp_path):
        csv = synthetic_csv(tmp_path, grid_rows())
        a = render(PlotSpec(csv=csv, metric="risk_exact",
                            out_dir=str(tmp_path / "a")))
        b = render(PlotSpec(csv=csv, metric="risk_exact",
                            out_dir=str(tmp_path / "b")))
        assert (open(a[0].path, "rb").read()
                == open(b[0].path, "rb").read())

    def test_png_format(self, tmp_path):
        csv = synthetic_csv(tmp_path, grid_rows())
        (panel,) = render(PlotSpec(csv=csv, metric="risk_exact",
                                   out_dir=str(tmp_path / "out"),
                                   fmt="png"))
        assert open(panel.path, "rb").read()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_bad_format_rejected(self):
        with pytest.raises(ValueError):
            PlotSpec(csv="x.csv", metric="m", fmt="pdf")

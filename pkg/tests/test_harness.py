import json
import subprocess
import sys

import numpy as np
import pytest

from cubelab.errors import ConfigError
from cubelab.harness import (
    DEFAULT_GAMMA_GRID,
    ExperimentConfig,
    GridPoint,
    config_from_dict,
    config_hash,
    rows_to_csv,
    run_fit,
    run_sweep,
    run_validation,
    sweep_rows,
)


def small_config(**overrides):
    base = dict(
        function="1*x1*x2 + {alpha}*x1",
        d_grid=(5,),
        log2n_grid=(7,),
        sigma2_grid=(0.0,),
        alpha_grid=(0.0,),
        estimator="cart",
        replicates=2,
        seed=11,
        gamma=0.25,
        metrics=("risk_exact", "depth"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            small_config(d_grid=())

    def test_unknown_metric_rejected(self):
        with pytest.raises(ConfigError):
            small_config(metrics=("bogus",))

    def test_coverage_needs_features(self):
        with pytest.raises(ConfigError):
            small_config(metrics=("coverage",))

    def test_alpha_templating(self):
        config = small_config(alpha_grid=(0.02,))
        f = config.target(GridPoint(5, 7, 0.0, 0.02))
        assert f.coefficient((1,)) == pytest.approx(0.02)
        # alpha = 0 drops the extra term entirely
        f0 = config.target(GridPoint(5, 7, 0.0, 0.0))
        assert f0.coefficient((1,)) == 0.0

    def test_hash_stable_and_sensitive(self):
        a = config_hash(small_config())
        assert a == config_hash(small_config())
        assert a != config_hash(small_config(seed=12))

    def test_from_dict_gamma_grid_mode(self):
        config = config_from_dict({
            "function": "1*x1*x2",
            "d": [10],
            "log2n": [7],
            "gamma": {"grid": [0.5, 0.25], "split": 0.8},
        })
        assert config.gamma is None
        assert config.gamma_grid == (0.5, 0.25)
        assert config.split == 0.8

    def test_from_dict_defaults(self):
        config = config_from_dict(
            {"function": "1*x1", "d": [5], "log2n": [7]}
        )
        assert config.gamma == 0.0
        assert config.gamma_grid == DEFAULT_GAMMA_GRID


class TestRunFit:
    def test_row_fields(self):
        config = small_config()
        row = run_fit(config, GridPoint(5, 7, 0.0, 0.0), replicate=0)
        assert row.d == 5 and row.log2n == 7 and row.replicate == 0
        assert row.gamma_used == 0.25
        assert row.risk_exact is not None

    def test_replicate_isolation(self):
        """Rows depend only on (grid point, replicate), not on order."""
        config = small_config(replicates=3)
        direct = run_fit(config, GridPoint(5, 7, 0.0, 0.0), replicate=2)
        from_sweep = [r for r in sweep_rows(config) if r.replicate == 2][0]
        assert direct == from_sweep

    def test_gamma_grid_selection(self):
        config = small_config(gamma=None, d_grid=(8,), log2n_grid=(10,),
                              gamma_grid=(1.0, 0.25, 2 ** -6),
                              function="1*x1 + {alpha}*x1*x2")
        row = run_fit(config, GridPoint(8, 10, 0.0, 0.0), replicate=0)
        # strong single-feature signal: any small gamma wins over 1.0
        assert row.gamma_used < 1.0
        assert row.risk_exact <= 0.01

    def test_random_estimator_depth0(self):
        config = small_config(estimator="random",
                              estimator_params={"depth_budget": 0},
                              function="1*x1*x2 + {alpha}*x1")
        row = run_fit(config, GridPoint(5, 7, 0.0, 0.0), replicate=0)
        # grand-mean leaf against a variance-1 target
        assert row.risk_exact == pytest.approx(1.0, abs=0.05)

    def test_erm_estimator(self):
        config = small_config(estimator="erm",
                              estimator_params={"depth": 2, "clip": 1.0})
        row = run_fit(config, GridPoint(5, 7, 0.0, 0.0), replicate=0)
        assert row.risk_exact == pytest.approx(0.0, abs=1e-12)


class TestSweep:
    def test_row_count_and_order(self):
        config = small_config(d_grid=(4, 5), alpha_grid=(0.0, 0.02),
                              replicates=3)
        rows = sweep_rows(config)
        assert len(rows) == 2 * 2 * 3
        assert [r.sort_key() for r in rows] == sorted(
            r.sort_key() for r in rows
        )

    def test_jobs_do_not_change_bytes(self, tmp_path):
        config = small_config(d_grid=(4, 5), replicates=2)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_sweep(config, str(a), jobs=1)
        run_sweep(config, str(b), jobs=4)
        assert a.read_bytes() == b.read_bytes()

    def test_header_has_config_hash(self):
        config = small_config()
        text = rows_to_csv(config, sweep_rows(config))
        assert text.splitlines()[0] == f"# config_hash={config_hash(config)}"

    def test_coverage_columns(self):
        config = small_config(metrics=("risk_exact", "coverage"),
                              coverage_features=(1, 2, 3))
        text = rows_to_csv(config, sweep_rows(config))
        header = text.splitlines()[1].split(",")
        assert header[-3:] == ["coverage_x1", "coverage_x2", "coverage_x3"]

    def test_irrelevant_coverage_small(self):
        # coverage of a feature outside the support stays near
        # (log2 n)/d for purity-grown trees
        config = small_config(
            function="1*x1 + {alpha}*x1*x2", d_grid=(20,), log2n_grid=(7,),
            sigma2_grid=(0.1,), gamma=0.0, replicates=30,
            estimator_params={"tie_break": "random"},
            metrics=("coverage",), coverage_features=(5,),
        )
        rows = sweep_rows(config)
        cov = np.array([dict(r.coverages)[5] for r in rows])
        bound = 7 / 20
        assert cov.mean() <= bound + 3 * cov.std(ddof=1) / np.sqrt(len(cov))


class TestValidationSuites:
    def test_depth_suite_passes(self):
        report = run_validation("depth", d=20, n=64, runs=40, seed=1)
        assert report.passed
        assert report.bound == 8.0

    def test_halving_suite_passes(self):
        report = run_validation("halving", d=20, n=256, runs=200, seed=2)
        assert report.passed

    def test_unknown_suite(self):
        with pytest.raises(ConfigError):
            run_validation("bogus")


class TestCli:
    def run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "cubelab.cli", *args],
            capture_output=True, text=True,
        )

    def test_analyze_exit_zero(self):
        proc = self.run("analyze", "--function", "1*x1*x2",
                        "--d", "50", "--n", "128")
        assert proc.returncode == 0
        assert "lower bound" in proc.stdout

    def test_analyze_json(self):
        proc = self.run("analyze", "--function", "1*x1*x2",
                        "--d", "50", "--n", "128", "--json")
        payload = json.loads(proc.stdout)
        assert payload["reports"][0]["delta"] == pytest.approx(18 / 49)

    def test_bad_function_is_config_error(self):
        proc = self.run("analyze", "--function", "nonsense",
                        "--d", "10", "--n", "64")
        assert proc.returncode == 2

    def test_fit_json(self):
        proc = self.run("fit", "--function", "1*x1", "--d", "5",
                        "--n", "256", "--gamma", "0.1", "--json")
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["risk_exact"] == pytest.approx(0.0)

    def test_sweep_and_validate(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        out = tmp_path / "out.csv"
        cfg.write_text(json.dumps({
            "function": "1*x1*x2", "d": [5], "log2n": [7],
            "replicates": 2, "gamma": 0.25,
        }))
        proc = self.run("sweep", "--config", str(cfg), "--out", str(out))
        assert proc.returncode == 0
        assert len(out.read_text().splitlines()) == 2 + 2

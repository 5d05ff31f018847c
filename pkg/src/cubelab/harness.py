"""Experiment harness: configuration, single fits, parallel sweeps with
deterministic CSV output, validation-set threshold selection, and the
Monte-Carlo validation suites for the selection/depth lemmas.

Seeding is per (grid point, replicate): every job derives its RNG streams
from the master seed plus the grid-point values and replicate index, so
rows can be recomputed in isolation and job order never matters.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng
from .boolcube import Dataset, NoiseModel, sample_dataset
from .bounds import selection_prob_bounds
from .errors import ConfigError
from .erm import ErmParams, fit_erm
from .fourier import SparseFourier, parse_function
from .greedy import CartParams, ForestParams, fit_cart, fit_forest, \
    fit_random_tree
from .trees import (
    Forest,
    TreeModel,
    coverage,
    exact_risk,
    expected_path_length,
    predict_rows,
    selection_probability,
)

__all__ = [
    "ExperimentConfig",
    "GridPoint",
    "SweepRow",
    "ValidationReport",
    "config_from_dict",
    "config_hash",
    "run_fit",
    "run_sweep",
    "run_validation",
    "DEFAULT_GAMMA_GRID",
]

DEFAULT_GAMMA_GRID: Tuple[float, ...] = tuple(2.0 ** -k for k in range(13))
DEFAULT_SPLIT = 0.7

KNOWN_METRICS = ("risk_exact", "coverage", "depth", "selection")
KNOWN_ESTIMATORS = ("cart", "rf", "erm", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    function: str  # term grammar, may contain the literal `{alpha}`
    d_grid: Tuple[int, ...]
    log2n_grid: Tuple[int, ...]
    sigma2_grid: Tuple[float, ...] = (0.0,)
    alpha_grid: Tuple[float, ...] = (0.0,)
    estimator: str = "cart"
    estimator_params: Dict[str, object] = field(default_factory=dict)
    replicates: int = 1
    seed: int = 0
    gamma: Optional[float] = 0.0  # fixed value; None = validation grid
    gamma_grid: Tuple[float, ...] = DEFAULT_GAMMA_GRID
    split: float = DEFAULT_SPLIT
    metrics: Tuple[str, ...] = ("risk_exact",)
    coverage_features: Tuple[int, ...] = ()

    def __post_init__(self):
        if not (self.d_grid and self.log2n_grid and self.sigma2_grid
                and self.alpha_grid):
            raise ConfigError("all grids must be nonempty")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not 0.0 < self.split < 1.0:
            raise ConfigError("split fraction must lie in (0, 1)")
        if self.estimator not in KNOWN_ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        for m in self.metrics:
            if m not in KNOWN_METRICS:
                raise ConfigError(f"unknown metric {m!r}")
        if "coverage" in self.metrics and not self.coverage_features:
            raise ConfigError("coverage metric needs coverage_features")

    def grid_points(self) -> List["GridPoint"]:
        return [GridPoint(d, ln, s2, a)
                for d in self.d_grid
                for ln in self.log2n_grid
                for s2 in self.sigma2_grid
                for a in self.alpha_grid]

    def target(self, point: "GridPoint") -> SparseFourier:
        text = self.function.replace("{alpha}", repr(point.alpha))
        return parse_function(text, point.d)


@dataclass(frozen=True, order=True)
class GridPoint:
    d: int
    log2n: int
    sigma2: float
    alpha: float

    @property
    def n(self) -> int:
        return 2 ** self.log2n


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from the documented JSON schema (see README)."""
    try:
        gamma_spec = data.get("gamma", 0.0)
        if isinstance(gamma_spec, dict):
            gamma = None
            gamma_grid = tuple(float(g) for g in
                               gamma_spec.get("grid", DEFAULT_GAMMA_GRID))
            split = float(gamma_spec.get("split", DEFAULT_SPLIT))
        else:
            gamma = float(gamma_spec)
            gamma_grid = DEFAULT_GAMMA_GRID
            split = DEFAULT_SPLIT
        return ExperimentConfig(
            function=data["function"],
            d_grid=tuple(int(v) for v in data["d"]),
            log2n_grid=tuple(int(v) for v in data["log2n"]),
            sigma2_grid=tuple(float(v) for v in data.get("sigma2", [0.0])),
            alpha_grid=tuple(float(v) for v in data.get("alpha", [0.0])),
            estimator=data.get("estimator", "cart"),
            estimator_params=dict(data.get("estimator_params", {})),
            replicates=int(data.get("replicates", 1)),
            seed=int(data.get("seed", 0)),
            gamma=gamma,
            gamma_grid=gamma_grid,
            split=split,
            metrics=tuple(data.get("metrics", ["risk_exact"])),
            coverage_features=tuple(
                int(k) for k in data.get("coverage_features", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc


def config_hash(config: ExperimentConfig) -> str:
    """Stable digest of the canonicalized config."""
    blob = json.dumps(
        {
            "function": config.function,
            "d": list(config.d_grid),
            "log2n": list(config.log2n_grid),
            "sigma2": list(config.sigma2_grid),
            "alpha": list(config.alpha_grid),
            "estimator": config.estimator,
            "estimator_params": config.estimator_params,
            "replicates": config.replicates,
            "seed": config.seed,
            "gamma": config.gamma,
            "gamma_grid": list(config.gamma_grid),
            "split": config.split,
            "metrics": list(config.metrics),
            "coverage_features": list(config.coverage_features),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepRow:
    experiment: str
    function_hash: str
    d: int
    log2n: int
    sigma2: float
    alpha: float
    estimator: str
    gamma_used: Optional[float]
    replicate: int
    seed: int
    risk_exact: Optional[float]
    mean_depth: Optional[float]
    node_count: int
    selection: Optional[float] = None
    coverages: Tuple[Tuple[int, float], ...] = ()

    def sort_key(self):
        return (self.d, self.log2n, self.sigma2, self.alpha, self.replicate)


# -- fitting one grid point ------------------------------------------------


def _point_seed(config: ExperimentConfig, point: GridPoint,
                replicate: int) -> int:
    return rng.derive_seed(config.seed, "rep", point.d, point.log2n,
                           point.sigma2, point.alpha, replicate)


def _fit_model(dataset: Dataset, config: ExperimentConfig,
               gamma: float, fit_seed: int):
    """Fit the configured estimator with an explicit gamma (cart/rf)."""
    params = config.estimator_params
    if config.estimator == "cart":
        cp = CartParams(
            gamma=gamma,
            max_depth=params.get("max_depth"),
            tie_break=params.get("tie_break", "lowest_index"),
            mtry=params.get("mtry"),
            min_samples=params.get("min_samples", 1),
        )
        return fit_cart(dataset, cp, seed=fit_seed)
    if config.estimator == "rf":
        cp = CartParams(
            gamma=gamma,
            max_depth=params.get("max_depth"),
            tie_break=params.get("tie_break", "lowest_index"),
            min_samples=params.get("min_samples", 1),
        )
        fp = ForestParams(
            trees=params.get("trees", 100),
            bootstrap=params.get("bootstrap", True),
            mtry=params.get("mtry"),
            cart=cp,
            seed=fit_seed,
        )
        return fit_forest(dataset, fp)
    if config.estimator == "erm":
        ep = ErmParams(
            depth_budget=params.get("depth", 2),
            clip=params.get("clip", 1.0),
        )
        tree, _ = fit_erm(dataset, ep)
        return tree
    if config.estimator == "random":
        budget = params.get("depth_budget")
        if budget is None:
            budget = int(math.floor(math.log2(dataset.n)))
        return fit_random_tree(dataset, budget, seed=fit_seed)
    raise ConfigError(f"unknown estimator {config.estimator!r}")


def _select_gamma(dataset: Dataset, config: ExperimentConfig,
                  fit_seed: int) -> float:
    """Pick gamma on a train/validation index split; ties -> smallest."""
    n_train = int(round(config.split * dataset.n))
    n_train = min(max(n_train, 1), dataset.n - 1)
    train = dataset.subset(np.arange(n_train))
    valid = dataset.subset(np.arange(n_train, dataset.n))
    best_gamma, best_mse = None, math.inf
    for gamma in sorted(config.gamma_grid):
        model = _fit_model(train, config, gamma, fit_seed)
        mse = float(np.mean(
            (predict_rows(model, valid.covariates) - valid.responses) ** 2
        ))
        if mse < best_mse:
            best_gamma, best_mse = gamma, mse
    return best_gamma


def run_fit(config: ExperimentConfig, point: GridPoint,
            replicate: int) -> SweepRow:
    """Fit one replicate at one grid point and compute its metrics.

    In gamma-grid mode, gamma is chosen by validation MSE on an index
    split of the generated dataset and the final model is refit on the
    full dataset with the selected gamma.
    """
    f = config.target(point)
    seed = _point_seed(config, point, replicate)
    noise = (NoiseModel("gaussian", math.sqrt(point.sigma2))
             if point.sigma2 > 0 else NoiseModel("none"))
    dataset = sample_dataset(f, point.d, point.n, noise, seed)
    fit_seed = rng.derive_seed(seed, "fit")

    uses_gamma = config.estimator in ("cart", "rf")
    if uses_gamma:
        gamma = config.gamma
        if gamma is None:
            gamma = _select_gamma(dataset, config, fit_seed)
        model = _fit_model(dataset, config, gamma, fit_seed)
    else:
        gamma = None
        model = _fit_model(dataset, config, 0.0, fit_seed)

    trees = model.trees if isinstance(model, Forest) else (model,)
    risk = None
    if "risk_exact" in config.metrics:
        risk = exact_risk(model, f, mc_seed=rng.derive_seed(seed, "mc")).risk
    depth = None
    if "depth" in config.metrics:
        depth = float(np.mean([expected_path_length(t) for t in trees]))
    selection = None
    if "selection" in config.metrics:
        relevant = sorted({j for s, _ in f.terms for j in s})
        selection = float(np.mean(
            [selection_probability(t, relevant) for t in trees]
        ))
    coverages: Tuple[Tuple[int, float], ...] = ()
    if "coverage" in config.metrics:
        coverages = tuple(
            (k, float(np.mean([coverage(t, k) for t in trees])))
            for k in config.coverage_features
        )
    return SweepRow(
        experiment=config_hash(config),
        function_hash=f.stable_hash(),
        d=point.d,
        log2n=point.log2n,
        sigma2=point.sigma2,
        alpha=point.alpha,
        estimator=config.estimator,
        gamma_used=gamma,
        replicate=replicate,
        seed=seed,
        risk_exact=risk,
        mean_depth=depth,
        node_count=sum(t.node_count for t in trees),
        selection=selection,
        coverages=coverages,
    )


# -- sweeps ----------------------------------------------------------------


def _job(args) -> SweepRow:
    config, point, replicate = args
    return run_fit(config, point, replicate)


def sweep_rows(config: ExperimentConfig, jobs: int = 1) -> List[SweepRow]:
    tasks = [(config, point, r)
             for point in sorted(config.grid_points())
             for r in range(config.replicates)]
    if jobs <= 1:
        rows = [_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_job, tasks, chunksize=1))
    rows.sort(key=SweepRow.sort_key)
    return rows


def _csv_float(v: Optional[float]) -> str:
    return "" if v is None else f"{v:.17g}"


def rows_to_csv(config: ExperimentConfig, rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash(config)}\n")
    cov_cols = [f"coverage_x{k}" for k in config.coverage_features]
    header = ["experiment", "function_hash", "d", "log2n", "sigma2",
              "alpha", "estimator", "gamma_used", "replicate", "seed",
              "risk_exact", "mean_depth", "node_count", "selection"]
    buf.write(",".join(header + cov_cols) + "\n")
    for row in rows:
        cov = dict(row.coverages)
        fields = [
            row.experiment, row.function_hash, str(row.d), str(row.log2n),
            _csv_float(row.sigma2), _csv_float(row.alpha), row.estimator,
            _csv_float(row.gamma_used), str(row.replicate), str(row.seed),
            _csv_float(row.risk_exact), _csv_float(row.mean_depth),
            str(row.node_count), _csv_float(row.selection),
        ] + [_csv_float(cov.get(k)) for k in config.coverage_features]
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def run_sweep(config: ExperimentConfig, out_path: str,
              jobs: int = 1) -> List[SweepRow]:
    """Run the full grid x replicate sweep and write a deterministic CSV.

    Rows are computed concurrently, then sorted by (grid point,
    replicate); re-running with the same config yields identical bytes.
    """
    rows = sweep_rows(config, jobs)
    with open(out_path, "w") as fh:
        fh.write(rows_to_csv(config, rows))
    return rows


# -- validation suites -------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    suite: str
    observed: float
    bound: float
    se: float
    passed: bool
    details: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "observed": self.observed,
            "bound": self.bound,
            "se": self.se,
            "passed": self.passed,
            "details": dict(self.details),
        }

    def pretty(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] suite={self.suite} observed={self.observed:.6g}"
                f" bound={self.bound:.6g} se={self.se:.3g}")


def _noise_dataset(d: int, n: int, seed: int) -> Dataset:
    """Pure-noise responses: standard normal, no signal."""
    zero = SparseFourier((), d)
    return sample_dataset(zero, d, n, NoiseModel("gaussian", 1.0), seed)


def run_validation(suite: str, *, d: int = 50, n: int = 128,
                   runs: int = 200, s: int = 2,
                   seed: int = 0) -> ValidationReport:
    """Monte-Carlo checks of the selection/depth statements.

    suite = "depth":   grow-to-purity CART on pure noise; mean expected
                       path length over runs vs log2 n + 2.
    suite = "halving": pure noise; child sample fraction at the root vs
                       the MC interval [0.47, 0.53] around 1/2.
    suite = "xor_selection": noiseless two-feature parity; exact per-tree
                       P{J(X) hits {1, 2}} averaged over runs vs the
                       2(log2 n + 2)/(d - 1) bound.
    suite = "nonadaptive_selection": completely random trees of depth
                       floor(log2 n); exact per-tree P{J(X) hits a random
                       s-subset} vs (s/d) log2 n.
    A suite passes when observed <= bound + 3 SE (for halving, when the
    observed mean fraction lies inside the interval).
    """
    purity = CartParams(gamma=0.0, tie_break="random")
    if suite == "depth":
        vals = []
        for r in range(runs):
            ds = _noise_dataset(d, n, rng.derive_seed(seed, "depth", r))
            tree = fit_cart(ds, purity,
                            seed=rng.derive_seed(seed, "depth-fit", r))
            vals.append(expected_path_length(tree))
        observed = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(runs))
        bound = selection_prob_bounds("depth", n=n)
        return ValidationReport(suite, observed, bound, se,
                                observed <= bound + 3 * se,
                                {"d": d, "n": n, "runs": runs})
    if suite == "halving":
        fracs = []
        for r in range(runs):
            ds = _noise_dataset(d, n, rng.derive_seed(seed, "halving", r))
            tree = fit_cart(ds, replace(purity, max_depth=1),
                            seed=rng.derive_seed(seed, "halving-fit", r))
            gen = rng.stream(seed, "halving-query", r)
            x = gen.integers(0, 2, size=d, dtype=np.int8) * 2 - 1
            root = tree.root
            if not hasattr(root, "feature"):
                continue
            side = ds.covariates[:, root.feature - 1] == x[root.feature - 1]
            fracs.append(side.sum() / ds.n)
        observed = float(np.mean(fracs))
        se = float(np.std(fracs, ddof=1) / math.sqrt(len(fracs)))
        passed = 0.47 <= observed <= 0.53
        return ValidationReport(suite, observed, 0.5, se, passed,
                                {"d": d, "n": n, "runs": runs})
    if suite == "xor_selection":
        f = parse_function("1*x1*x2", d)
        vals = []
        for r in range(runs):
            ds = sample_dataset(f, d, n, NoiseModel("none"),
                                rng.derive_seed(seed, "xor", r))
            tree = fit_cart(ds, purity,
                            seed=rng.derive_seed(seed, "xor-fit", r))
            vals.append(selection_probability(tree, (1, 2)))
        observed = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(runs))
        bound = selection_prob_bounds("xor", d=d, n=n)
        return ValidationReport(suite, observed, bound, se,
                                observed <= bound + 3 * se,
                                {"d": d, "n": n, "runs": runs})
    if suite == "nonadaptive_selection":
        budget = int(math.floor(math.log2(n)))
        vals = []
        for r in range(runs):
            gen = rng.stream(seed, "na-support", r)
            relevant = gen.choice(np.arange(1, d + 1), size=s,
                                  replace=False)
            ds = _noise_dataset(d, n, rng.derive_seed(seed, "na", r))
            tree = fit_random_tree(ds, budget,
                                   seed=rng.derive_seed(seed, "na-fit", r))
            vals.append(selection_probability(tree, relevant))
        observed = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(runs))
        bound = selection_prob_bounds("nonadaptive", s=s, d=d, n=n)
        return ValidationReport(suite, observed, bound, se,
                                observed <= bound + 3 * se,
                                {"d": d, "n": n, "runs": runs, "s": s})
    raise ConfigError(f"unknown validation suite {suite!r}")

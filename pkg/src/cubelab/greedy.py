"""Greedy tree fitting: CART impurity machinery, the plug-in greedy
criterion contract, bootstrapped random forests, and completely random
(non-adaptive) trees.

The CART split score at a node is the impurity decrease

    delta(k) = I(C) - (N_R/N) I(C_R) - (N_L/N) I(C_L)
             = p (1 - p) (ybar_R - ybar_L)^2
             = I(C) * Corr^2{Y, X_k | C}

where p is the fraction of node samples with X_k = +1.  A node becomes a
leaf when its weighted best decrease (N/n) * max_k delta(k) falls below
the threshold gamma, when it runs out of samples or candidate features,
when it hits the depth cap, or when its responses are already constant
(grown to purity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import rng
from .boolcube import Dataset
from .errors import (
    EmptyCell,
    EmptyDataset,
    FeatureAlreadyFixed,
    InvalidArgs,
)
from .trees import Forest, Internal, Leaf, Node, TreeModel

__all__ = [
    "CartParams",
    "ForestParams",
    "impurity",
    "impurity_decrease",
    "fit_cart",
    "fit_forest",
    "fit_random_tree",
    "register_criterion",
    "get_criterion",
    "CRITERIA",
]

# A greedy criterion sees only the split feature's column and the node
# responses, and returns a score to maximize.  Criteria should be
# symmetric under x -> -x, but this is a documented convention, not a
# runtime check.
GreedyCriterion = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class CartParams:
    gamma: float = 0.0
    max_depth: Optional[int] = None
    tie_break: str = "lowest_index"  # "lowest_index" | "random"
    mtry: Optional[int] = None
    min_samples: int = 1

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidArgs("gamma must be >= 0")
        if self.tie_break not in ("lowest_index", "random"):
            raise InvalidArgs(f"unknown tie_break {self.tie_break!r}")
        if self.mtry is not None and self.mtry < 1:
            raise InvalidArgs("mtry must be >= 1")
        if self.min_samples < 1:
            raise InvalidArgs("min_samples must be >= 1")


@dataclass(frozen=True)
class ForestParams:
    trees: int = 100
    bootstrap: bool = True
    mtry: Optional[int] = None  # defaults to ceil(sqrt(d)) at fit time
    cart: CartParams = field(default_factory=CartParams)
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise InvalidArgs("forest needs trees >= 1")


def impurity(responses: np.ndarray) -> float:
    """Mean squared deviation of the responses within a cell."""
    responses = np.asarray(responses, dtype=float)
    if responses.size == 0:
        raise EmptyCell("impurity of an empty cell is undefined")
    if responses.max() == responses.min():
        return 0.0  # exact zero for constant responses (purity checks)
    return float(np.mean((responses - responses.mean()) ** 2))


def impurity_decrease(k: int, cell, dataset: Dataset) -> float:
    """Impurity decrease of splitting `cell` on feature k (1-based).

    Uses the p(1-p)(ybar_R - ybar_L)^2 form, which extends continuously
    to degenerate splits (one empty child) with value 0.
    """
    if k in cell.fixed_features:
        raise FeatureAlreadyFixed(f"x{k} already fixed in cell")
    idx = _members(cell, dataset)
    if idx.size == 0:
        raise EmptyCell("no samples in cell")
    y = dataset.responses[idx]
    right = dataset.covariates[idx, k - 1] == 1
    n_r = int(right.sum())
    n = idx.size
    if n_r == 0 or n_r == n:
        return 0.0
    p = n_r / n
    gap = y[right].mean() - y[~right].mean()
    return float(p * (1.0 - p) * gap * gap)


def _members(cell, dataset: Dataset) -> np.ndarray:
    mask = np.ones(dataset.n, dtype=bool)
    for k, z in cell.constraints:
        mask &= dataset.covariates[:, k - 1] == z
    return np.flatnonzero(mask)


def cart_criterion(x_col: np.ndarray, y: np.ndarray) -> float:
    """Reference (non-vectorized) CART criterion for the plug-in registry."""
    right = x_col == 1
    n_r = int(right.sum())
    n = x_col.size
    if n_r == 0 or n_r == n:
        return 0.0
    p = n_r / n
    gap = y[right].mean() - y[~right].mean()
    return float(p * (1.0 - p) * gap * gap)


CRITERIA: Dict[str, GreedyCriterion] = {}


def register_criterion(name: str, fn: GreedyCriterion) -> None:
    CRITERIA[name] = fn


def get_criterion(name: str) -> GreedyCriterion:
    try:
        return CRITERIA[name]
    except KeyError:
        raise InvalidArgs(
            f"unknown criterion {name!r}; registered: {sorted(CRITERIA)}"
        ) from None


register_criterion("cart", cart_criterion)


def _cart_scores(X: np.ndarray, y: np.ndarray,
                 candidates: np.ndarray) -> np.ndarray:
    """Vectorized impurity decrease for every candidate column at once."""
    n = y.size
    t = X[:, candidates - 1].astype(np.float64)
    n_r = (t.sum(axis=0) + n) / 2.0
    sum_r = (t.T @ y + y.sum()) / 2.0
    p = n_r / n
    scores = np.zeros(candidates.size)
    ok = (n_r > 0) & (n_r < n)
    mean_r = sum_r[ok] / n_r[ok]
    mean_l = (y.sum() - sum_r[ok]) / (n - n_r[ok])
    gap = mean_r - mean_l
    scores[ok] = p[ok] * (1.0 - p[ok]) * gap * gap
    return scores


def fit_cart(dataset: Dataset, params: CartParams = CartParams(),
             criterion: str = "cart", seed: int = 0) -> TreeModel:
    """Grow a CART tree top-down on the full dataset.

    Candidate features at a node are the unconstrained features that are
    nonconstant within the node, intersected with a fresh uniform mtry
    draw when mtry is set.  The split maximizes the criterion; ties go to
    the lowest feature index or a uniform choice per `tie_break`.
    """
    if dataset.n == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    crit = None if criterion == "cart" else get_criterion(criterion)
    gen = rng.stream(seed, "cart")
    root = _grow(dataset.covariates, dataset.responses,
                 np.arange(dataset.n), frozenset(), 0,
                 dataset.n, params, crit, gen)
    return TreeModel(root, dataset.d)


def _grow(X, y, idx, used, depth, n_total, params, crit, gen) -> Node:
    sub_y = y[idx]
    mu = float(sub_y.mean())
    if idx.size <= params.min_samples:
        return Leaf(mu)
    if params.max_depth is not None and depth >= params.max_depth:
        return Leaf(mu)
    if sub_y.max() == sub_y.min():
        return Leaf(mu)  # grown to purity

    sub_X = X[idx]
    d = X.shape[1]
    free = np.array([k for k in range(1, d + 1) if k not in used])
    if free.size == 0:
        return Leaf(mu)
    cols = sub_X[:, free - 1]
    nonconstant = cols.min(axis=0) != cols.max(axis=0)
    candidates = free[nonconstant]
    if params.mtry is not None and params.mtry < d:
        drawn = gen.choice(np.arange(1, d + 1), size=params.mtry,
                           replace=False)
        candidates = np.intersect1d(candidates, drawn)
    if candidates.size == 0:
        return Leaf(mu)

    if crit is None:
        scores = _cart_scores(sub_X, sub_y.astype(np.float64), candidates)
    else:
        scores = np.array(
            [crit(sub_X[:, k - 1], sub_y) for k in candidates]
        )
    best = scores.max()
    if (idx.size / n_total) * best < params.gamma:
        return Leaf(mu)
    tied = candidates[scores >= best - 0.0]
    if params.tie_break == "random" and tied.size > 1:
        k = int(tied[gen.integers(tied.size)])
    else:
        k = int(tied[0])

    right = sub_X[:, k - 1] == 1
    used = used | {k}
    return Internal(
        k,
        _grow(X, y, idx[~right], used, depth + 1, n_total, params, crit, gen),
        _grow(X, y, idx[right], used, depth + 1, n_total, params, crit, gen),
    )


def fit_forest(dataset: Dataset, params: ForestParams,
               criterion: str = "cart") -> Forest:
    """Fit a forest of CART trees on bootstrap resamples.

    Tree m draws its bootstrap indices and all node-level randomness from
    the stream (seed, "tree", m), so forests are reproducible per seed and
    trees can be refit independently.
    """
    if dataset.n == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    mtry = params.mtry
    if mtry is None:
        mtry = math.ceil(math.sqrt(dataset.d))
    cart = replace(params.cart, mtry=mtry if mtry < dataset.d else None)
    crit = None if criterion == "cart" else get_criterion(criterion)
    trees = []
    for m in range(params.trees):
        gen = rng.stream(params.seed, "tree", m)
        if params.bootstrap:
            boot = gen.integers(dataset.n, size=dataset.n)
        else:
            boot = np.arange(dataset.n)
        root = _grow(dataset.covariates[boot], dataset.responses[boot],
                     np.arange(dataset.n), frozenset(), 0,
                     dataset.n, cart, crit, gen)
        trees.append(TreeModel(root, dataset.d))
    return Forest(tuple(trees))


def fit_random_tree(dataset: Dataset, depth_budget: int,
                    seed: int = 0) -> TreeModel:
    """Grow a completely random tree: split features drawn uniformly from
    the unconstrained features, independent of the responses.

    Stops at depth_budget or when a node holds at most one sample.  Empty
    descendants are labeled with the grand mean.
    """
    if dataset.n == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    if depth_budget < 0:
        raise InvalidArgs("depth_budget must be >= 0")
    gen = rng.stream(seed, "random-tree")
    grand_mean = float(dataset.responses.mean())
    root = _grow_random(dataset.covariates, dataset.responses,
                        np.arange(dataset.n), frozenset(), depth_budget,
                        grand_mean, gen)
    return TreeModel(root, dataset.d)


def _grow_random(X, y, idx, used, budget, grand_mean, gen) -> Node:
    if idx.size == 0:
        return Leaf(grand_mean)
    if budget == 0 or idx.size <= 1:
        return Leaf(float(y[idx].mean()))
    d = X.shape[1]
    free = [k for k in range(1, d + 1) if k not in used]
    if not free:
        return Leaf(float(y[idx].mean()))
    k = int(free[gen.integers(len(free))])
    right = X[idx, k - 1] == 1
    used = used | {k}
    return Internal(
        k,
        _grow_random(X, y, idx[~right], used, budget - 1, grand_mean, gen),
        _grow_random(X, y, idx[right], used, budget - 1, grand_mean, gen),
    )

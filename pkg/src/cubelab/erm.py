"""Exact empirical-risk-minimizing trees over depth-bounded structures.

fit_erm minimizes (1/n) sum (Y_i - g(X_i))^2 over all trees of depth at
most depth_budget whose leaf labels are clipped node means, via the
memoized recursion

    best(cell, h) = min( leaf SSE,  min_k best(left, h-1) + best(right, h-1) )

keyed on the canonical cell signature (sorted constraint pairs).  Ties
break toward leaves, then toward the lowest split feature, so the result
is deterministic.  enumerate_erm_oracle cross-checks the DP by explicit
enumeration of all tree structures on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .boolcube import Dataset
from .errors import EmptyDataset, InvalidArgs, StateCapExceeded, TooLarge
from .trees import Internal, Leaf, Node, TreeModel

__all__ = ["ErmParams", "fit_erm", "enumerate_erm_oracle"]


@dataclass(frozen=True)
class ErmParams:
    depth_budget: int
    clip: float = 1.0
    state_cap: int = 1_000_000

    def __post_init__(self):
        if self.depth_budget < 0:
            raise InvalidArgs("depth_budget must be >= 0")
        if self.clip <= 0:
            raise InvalidArgs("clip bound must be positive")
        if self.state_cap < 1:
            raise InvalidArgs("state_cap must be >= 1")


def _leaf_cost(y: np.ndarray, clip: float) -> Tuple[float, float]:
    """(SSE, label) of a leaf whose label is the clipped node mean."""
    if y.size == 0:
        return 0.0, 0.0
    mu = float(np.clip(y.mean(), -clip, clip))
    return float(np.sum((y - mu) ** 2)), mu


def fit_erm(dataset: Dataset, params: ErmParams) -> Tuple[TreeModel, float]:
    """Optimal depth-bounded tree and its empirical risk (1/n)*SSE."""
    if dataset.n == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    if params.depth_budget > dataset.d:
        raise InvalidArgs("depth_budget exceeds ambient dimension")

    X = dataset.covariates
    y = dataset.responses
    d = dataset.d
    # states reachable within the budget: at most sum_k C(d,k) 2^k cells
    estimate = sum(math.comb(d, k) * 2 ** k
                   for k in range(params.depth_budget + 1))
    if estimate > params.state_cap:
        raise StateCapExceeded(
            f"about {estimate} memo states exceed cap {params.state_cap}"
        )

    memo: Dict[Tuple[Tuple[int, int], ...], Tuple[float, Node]] = {}

    def best(constraints: Tuple[Tuple[int, int], ...],
             idx: np.ndarray, h: int) -> Tuple[float, Node]:
        key = constraints
        hit = memo.get(key)
        if hit is not None:
            return hit
        sse, mu = _leaf_cost(y[idx], params.clip)
        result: Tuple[float, Node] = (sse, Leaf(mu))
        if h > 0 and idx.size > 0 and sse > 0.0:
            fixed = {k for k, _ in constraints}
            for k in range(1, d + 1):
                if k in fixed:
                    continue
                right = X[idx, k - 1] == 1
                c_l = tuple(sorted(constraints + ((k, -1),)))
                c_r = tuple(sorted(constraints + ((k, 1),)))
                sse_l, node_l = best(c_l, idx[~right], h - 1)
                sse_r, node_r = best(c_r, idx[right], h - 1)
                if sse_l + sse_r < result[0]:
                    result = (sse_l + sse_r, Internal(k, node_l, node_r))
        memo[key] = result
        return result

    # The memo is keyed on cells alone (not remaining depth): a cell with
    # q constraints is only ever visited with budget depth_budget - q, so
    # the key is unambiguous for reachable states.
    sse, root = best((), np.arange(dataset.n), params.depth_budget)
    return TreeModel(root, d), sse / dataset.n


# -- brute-force oracle ----------------------------------------------------


def enumerate_erm_oracle(dataset: Dataset, params: ErmParams) -> float:
    """Optimal empirical risk by exhaustive enumeration of structures.

    Deliberately independent of the DP: generates every tree shape of
    depth <= depth_budget with distinct features per path, scores each by
    clipped leaf means, and returns the minimum.  Feasible only for small
    problems (d <= 6, depth <= 3).
    """
    if dataset.n == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    if dataset.d > 6 or params.depth_budget > 3:
        raise TooLarge("oracle enumeration limited to d <= 6, depth <= 3")

    X = dataset.covariates
    y = dataset.responses

    def structures(free: frozenset, h: int):
        """Yield structures as nested tuples: None = leaf, (k, l, r)."""
        yield None
        if h == 0:
            return
        for k in sorted(free):
            rest = free - {k}
            for left in structures(rest, h - 1):
                for right in structures(rest, h - 1):
                    yield (k, left, right)

    def score(shape, idx) -> float:
        if shape is None:
            return _leaf_cost(y[idx], params.clip)[0]
        k, left, right = shape
        mask = X[idx, k - 1] == 1
        return score(left, idx[~mask]) + score(right, idx[mask])

    all_idx = np.arange(dataset.n)
    best_sse = min(score(shape, all_idx)
                   for shape in structures(frozenset(range(1, dataset.d + 1)),
                                           params.depth_budget))
    return best_sse / dataset.n

"""Tree models on the Boolean cube: prediction, exact L2 risk via the
Fourier expansion, query paths, and split coverage.

A tree is a binary, axis-aligned structure whose internal nodes name a
split feature (left child takes x_k = -1, right takes x_k = +1) and whose
leaves carry real labels.  Leaf cells partition the cube, so the leaf
measures 2^-depth always sum to one.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import rng
from .boolcube import Cell
from .errors import DimensionMismatch, IndexOutOfRange
from .fourier import SparseFourier, restrict

__all__ = [
    "Leaf",
    "Internal",
    "TreeModel",
    "Forest",
    "predict",
    "exact_risk",
    "query_path",
    "coverage",
    "coverage_all",
    "expected_path_length",
    "selection_probability",
    "tree_to_dict",
    "tree_from_dict",
    "RiskReport",
]

SCHEMA_VERSION = 1

# Forests whose common leaf-partition refinement would exceed this many
# cells fall back to Monte Carlo risk estimation.
REFINEMENT_CAP = 1 << 20


@dataclass(frozen=True)
class Leaf:
    value: float


@dataclass(frozen=True)
class Internal:
    feature: int  # 1-based
    left: "Node"   # x_feature = -1
    right: "Node"  # x_feature = +1


Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class TreeModel:
    root: Node
    dim: int

    def __post_init__(self):
        total = _check(self.root, self.dim, frozenset(), 0)
        # exact in binary arithmetic: every leaf contributes 2^-depth
        if total != 1.0:
            raise ValueError("leaf measures do not partition the cube")

    def leaves(self) -> Iterator[Tuple[Cell, int, float, Tuple[int, ...]]]:
        """Yield (cell, depth, value, path features) for every leaf."""
        yield from _leaves(self.root, self.dim, (), ())

    @property
    def node_count(self) -> int:
        return _count(self.root)

    @property
    def leaf_count(self) -> int:
        return (_count(self.root) + 1) // 2

    @property
    def depth(self) -> int:
        return _depth(self.root)


def _check(node: Node, dim: int, used: frozenset, depth: int) -> float:
    if isinstance(node, Leaf):
        return 2.0 ** -depth
    if not 1 <= node.feature <= dim:
        raise IndexOutOfRange(f"split feature x{node.feature} outside 1..{dim}")
    if node.feature in used:
        raise ValueError(f"feature x{node.feature} repeated along a path")
    used = used | {node.feature}
    return (_check(node.left, dim, used, depth + 1)
            + _check(node.right, dim, used, depth + 1))


def _leaves(node, dim, constraints, path):
    if isinstance(node, Leaf):
        yield Cell(dim, constraints), len(constraints), node.value, path
        return
    yield from _leaves(node.left, dim, constraints + ((node.feature, -1),),
                       path + (node.feature,))
    yield from _leaves(node.right, dim, constraints + ((node.feature, 1),),
                       path + (node.feature,))


def _count(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + _count(node.left) + _count(node.right)


def _depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


@dataclass(frozen=True)
class Forest:
    trees: Tuple[TreeModel, ...]

    def __post_init__(self):
        if not self.trees:
            raise ValueError("forest needs at least one tree")
        dims = {t.dim for t in self.trees}
        if len(dims) != 1:
            raise DimensionMismatch("forest trees disagree on dimension")

    @property
    def dim(self) -> int:
        return self.trees[0].dim


Model = Union[TreeModel, Forest]


# -- prediction ----------------------------------------------------------


def predict(model: Model, x) -> float:
    x = np.asarray(x)
    if x.shape != (model.dim,):
        raise DimensionMismatch(
            f"point has shape {x.shape}, expected ({model.dim},)"
        )
    if isinstance(model, Forest):
        return float(np.mean([_predict_tree(t.root, x) for t in model.trees]))
    return _predict_tree(model.root, x)


def _predict_tree(node: Node, x) -> float:
    while isinstance(node, Internal):
        node = node.right if x[node.feature - 1] == 1 else node.left
    return node.value


def predict_rows(model: Model, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    if isinstance(model, Forest):
        return np.mean([predict_rows(t, X) for t in model.trees], axis=0)
    out = np.empty(X.shape[0])
    _predict_rows_rec(model.root, X, np.arange(X.shape[0]), out)
    return out


def _predict_rows_rec(node, X, idx, out):
    if isinstance(node, Leaf):
        out[idx] = node.value
        return
    right = X[idx, node.feature - 1] == 1
    _predict_rows_rec(node.right, X, idx[right], out)
    _predict_rows_rec(node.left, X, idx[~right], out)


# -- exact risk ----------------------------------------------------------


@dataclass(frozen=True)
class RiskReport:
    risk: float
    method: str  # "exact" | "mc"
    se: float = 0.0

    def to_dict(self):
        return {"risk": self.risk, "method": self.method, "se": self.se}


def exact_risk(model: Model, f: SparseFourier,
               mc_points: int = 200_000, mc_seed: int = 0,
               refinement_cap: int = REFINEMENT_CAP) -> RiskReport:
    """L2 risk E(model(X) - f(X))^2 under the uniform measure.

    For a tree this is exact: each leaf L of measure 2^-depth contributes
    (mu_L - mean of f on L)^2 plus the residual variance of f on L, both
    read off the restricted Fourier coefficients.  Forests use the common
    refinement of the leaf partitions when it stays below the cap, and
    otherwise fall back to Monte Carlo with a reported standard error.
    """
    if model.dim != f.dim:
        raise DimensionMismatch(
            f"model dim {model.dim} != function dim {f.dim}"
        )
    if isinstance(model, TreeModel):
        return RiskReport(_tree_risk(model, f), "exact")
    cells = _refine_forest(model, refinement_cap)
    if cells is None:
        return _mc_risk(model, f, mc_points, mc_seed)
    total = 0.0
    for constraints, value in cells:
        g = restrict(f, Cell(model.dim, constraints))
        resid = g.variance
        total += 2.0 ** -len(constraints) * ((value - g.mean) ** 2 + resid)
    return RiskReport(total, "exact")


def _tree_risk(tree: TreeModel, f: SparseFourier) -> float:
    total = 0.0
    for cell, depth, value, _ in tree.leaves():
        g = restrict(f, cell)
        total += 2.0 ** -depth * ((value - g.mean) ** 2 + g.variance)
    return total


def _refine_forest(forest: Forest, cap: int):
    """Common refinement of the trees' leaf partitions, or None above cap.

    Each refinement cell is a consistent merge of one leaf per tree; its
    value is the mean of the member leaf labels.
    """
    cells = [((), 0.0)]
    for m, tree in enumerate(forest.trees):
        new_cells = []
        for constraints, acc in cells:
            fixed = dict(constraints)
            for leaf_cell, _, value, _ in _consistent_leaves(tree.root, fixed):
                merged = dict(fixed)
                merged.update(leaf_cell)
                new_cells.append(
                    (tuple(sorted(merged.items())), acc + value)
                )
                if len(new_cells) > cap:
                    return None
        cells = new_cells
    M = len(forest.trees)
    return [(c, acc / M) for c, acc in cells]


def _consistent_leaves(node, fixed, constraints=()):
    """Leaves of a tree reachable under the partial assignment `fixed`."""
    if isinstance(node, Leaf):
        yield dict(constraints), None, node.value, None
        return
    z = fixed.get(node.feature)
    if z is None or z == -1:
        yield from _consistent_leaves(node.left, fixed,
                                      constraints + ((node.feature, -1),))
    if z is None or z == 1:
        yield from _consistent_leaves(node.right, fixed,
                                      constraints + ((node.feature, 1),))


def _mc_risk(model: Model, f: SparseFourier, points: int,
             seed: int) -> RiskReport:
    gen = rng.stream(seed, "mc-risk")
    X = gen.integers(0, 2, size=(points, model.dim), dtype=np.int8) * 2 - 1
    err = (predict_rows(model, X) - f.evaluate_rows(X)) ** 2
    return RiskReport(float(err.mean()), "mc",
                      float(err.std(ddof=1) / np.sqrt(points)))


# -- query paths and coverage ---------------------------------------------


def query_path(tree: TreeModel, x) -> List[int]:
    """Split features along the root-to-leaf path of x, in depth order."""
    x = np.asarray(x)
    if x.shape != (tree.dim,):
        raise DimensionMismatch(
            f"point has shape {x.shape}, expected ({tree.dim},)"
        )
    node = tree.root
    path = []
    while isinstance(node, Internal):
        path.append(node.feature)
        node = node.right if x[node.feature - 1] == 1 else node.left
    return path


def coverage(tree: TreeModel, k: int) -> float:
    """P{k in J(X)} for uniform X: total measure of leaves whose root
    path splits on feature k."""
    if not 1 <= k <= tree.dim:
        raise IndexOutOfRange(f"feature x{k} outside 1..{tree.dim}")
    return _coverage_rec(tree.root, k, 0)


def _coverage_rec(node, k, depth):
    if isinstance(node, Leaf):
        return 0.0
    if node.feature == k:
        return 2.0 ** -depth
    return (_coverage_rec(node.left, k, depth + 1)
            + _coverage_rec(node.right, k, depth + 1))


def coverage_all(tree: TreeModel) -> np.ndarray:
    """Coverage of every feature (index k-1 holds feature k)."""
    out = np.zeros(tree.dim)
    _coverage_all_rec(tree.root, 0, out)
    return out


def _coverage_all_rec(node, depth, out):
    if isinstance(node, Leaf):
        return
    out[node.feature - 1] += 2.0 ** -depth
    _coverage_all_rec(node.left, depth + 1, out)
    _coverage_all_rec(node.right, depth + 1, out)


def expected_path_length(tree: TreeModel) -> float:
    """E|J(X)| = sum over leaves of depth * 2^-depth; equals the sum of
    per-feature coverages."""
    return sum(depth * 2.0 ** -depth for _, depth, _, _ in tree.leaves())


def selection_probability(tree: TreeModel, features) -> float:
    """P{J(X) intersects the given feature set}, exactly."""
    features = set(int(k) for k in features)
    return _sel_rec(tree.root, features, 0)


def _sel_rec(node, features, depth):
    if isinstance(node, Leaf):
        return 0.0
    if node.feature in features:
        return 2.0 ** -depth
    return (_sel_rec(node.left, features, depth + 1)
            + _sel_rec(node.right, features, depth + 1))


# -- serialization --------------------------------------------------------


def tree_to_dict(tree: TreeModel) -> dict:
    return {"schema": SCHEMA_VERSION, "dim": tree.dim,
            "root": _node_to_dict(tree.root)}


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"value": node.value}
    return {"feature": node.feature,
            "left": _node_to_dict(node.left),
            "right": _node_to_dict(node.right)}


def tree_from_dict(data: dict) -> TreeModel:
    if data.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported tree schema {data.get('schema')!r}")
    return TreeModel(_node_from_dict(data["root"]), data["dim"])


def _node_from_dict(data: dict) -> Node:
    if "value" in data:
        return Leaf(float(data["value"]))
    return Internal(int(data["feature"]),
                    _node_from_dict(data["left"]),
                    _node_from_dict(data["right"]))

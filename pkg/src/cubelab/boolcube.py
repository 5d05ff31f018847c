"""Core hypercube domain: cells, datasets, sampling, and noise.

Points live on {-1,+1}^d under the uniform measure.  Feature indices are
1-based in all external formats and error messages.  Cells fix a subset of
coordinates to signs; a cell fixing q coordinates has measure 2^-q.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Tuple

import numpy as np

from . import rng
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    FeatureAlreadyFixed,
    IndexOutOfRange,
    SupportExceedsDimension,
)

__all__ = [
    "Cell",
    "Dataset",
    "NoiseModel",
    "split_cell",
    "cell_members",
    "sample_dataset",
    "dataset_to_csv",
    "dataset_from_csv",
]


@dataclass(frozen=True)
class NoiseModel:
    """Additive response noise: none, or centered Gaussian with std sigma."""

    kind: str = "none"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "none" and self.sigma != 0.0:
            raise ValueError("kind='none' requires sigma=0")


@dataclass(frozen=True)
class Cell:
    """Subcube of {-1,+1}^dim given by fixed coordinates and their signs.

    Constraints are stored as a sorted tuple of (feature, sign) pairs so
    cells are hashable and order-canonical.
    """

    dim: int
    constraints: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        canon = tuple(sorted((int(k), int(z)) for k, z in self.constraints))
        keys = [k for k, _ in canon]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate constrained feature")
        for k, z in canon:
            if not 1 <= k <= self.dim:
                raise IndexOutOfRange(f"feature x{k} outside 1..{self.dim}")
            if z not in (-1, 1):
                raise ValueError(f"sign for x{k} must be -1 or +1")
        object.__setattr__(self, "constraints", canon)

    @property
    def constraint_map(self) -> Mapping[int, int]:
        return dict(self.constraints)

    @property
    def fixed_features(self) -> frozenset:
        return frozenset(k for k, _ in self.constraints)

    @property
    def measure(self) -> float:
        """Fraction of the hypercube covered by this cell."""
        return 2.0 ** -len(self.constraints)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"point has {x.shape[-1]} coordinates, cell dim is {self.dim}"
            )
        return all(x[k - 1] == z for k, z in self.constraints)


def split_cell(cell: Cell, k: int, z: int) -> Cell:
    """Child of `cell` obtained by additionally fixing x_k = z."""
    if not 1 <= k <= cell.dim:
        raise IndexOutOfRange(f"feature x{k} outside 1..{cell.dim}")
    if k in cell.fixed_features:
        raise FeatureAlreadyFixed(f"feature x{k} is already fixed in this cell")
    if z not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    return Cell(cell.dim, cell.constraints + ((k, z),))


@dataclass(frozen=True)
class Dataset:
    """Immutable sample of n covariate rows on {-1,+1}^d plus responses.

    `provenance` records (function hash, noise sigma, seed) when generated
    by `sample_dataset`; hand-built datasets may leave it None.
    """

    covariates: np.ndarray
    responses: np.ndarray
    provenance: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.covariates, dtype=np.int8))
        y = np.ascontiguousarray(np.asarray(self.responses, dtype=np.float64))
        if X.ndim != 2:
            raise ValueError("covariates must be an n x d matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("responses length must match covariate rows")
        if X.shape[0] < 1:
            raise EmptyDataset("dataset must contain at least one row")
        if not np.all(np.abs(X) == 1):
            raise ValueError("covariate entries must be -1 or +1")
        if not np.all(np.isfinite(y)):
            raise ValueError("responses must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    def column(self, k: int) -> np.ndarray:
        """1-based covariate column."""
        if not 1 <= k <= self.d:
            raise IndexOutOfRange(f"feature x{k} outside 1..{self.d}")
        return self.covariates[:, k - 1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Row subset (e.g. a train/validation split or bootstrap resample)."""
        return Dataset(self.covariates[indices], self.responses[indices],
                       provenance=self.provenance)


def cell_members(cell: Cell, dataset: Dataset):
    """Indices, count, and mean response of the rows lying in `cell`.

    Returns (indices, count, mean); mean is None for an empty cell.
    """
    if cell.dim != dataset.d:
        raise DimensionMismatch(
            f"cell dim {cell.dim} != dataset dim {dataset.d}"
        )
    mask = np.ones(dataset.n, dtype=bool)
    for k, z in cell.constraints:
        mask &= dataset.covariates[:, k - 1] == z
    idx = np.flatnonzero(mask)
    count = int(idx.size)
    mean = float(dataset.responses[idx].mean()) if count else None
    return idx, count, mean


def sample_dataset(f, d: int, n: int, noise: NoiseModel, seed: int) -> Dataset:
    """Draw n i.i.d. uniform rows on {-1,+1}^d with responses f(X) + noise.

    Deterministic given `seed`; covariates and noise use separate derived
    streams so the same covariate draw is reproducible under either noise
    model.
    """
    if n < 1:
        raise EmptyDataset("n must be at least 1")
    support = f.support
    if support and max(support) > d:
        raise SupportExceedsDimension(
            f"function touches x{max(support)} but d={d}"
        )
    gen_x = rng.stream(seed, "covariates")
    X = gen_x.integers(0, 2, size=(n, d), dtype=np.int8) * 2 - 1
    y = f.evaluate_rows(X)
    if noise.kind == "gaussian" and noise.sigma > 0:
        gen_e = rng.stream(seed, "noise")
        y = y + noise.sigma * gen_e.standard_normal(n)
    return Dataset(X, y, provenance=(f.stable_hash(), noise.sigma, seed))


def dataset_to_csv(dataset: Dataset) -> str:
    """Serialize to `x1,...,xd,y` CSV with 17-significant-digit responses."""
    buf = io.StringIO()
    buf.write(",".join([f"x{j}" for j in range(1, dataset.d + 1)] + ["y"]))
    buf.write("\n")
    for i in range(dataset.n):
        row = ",".join(str(int(v)) for v in dataset.covariates[i])
        buf.write(f"{row},{dataset.responses[i]:.17g}\n")
    return buf.getvalue()


def dataset_from_csv(text: str) -> Dataset:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    if header[-1] != "y" or any(
        h != f"x{j+1}" for j, h in enumerate(header[:-1])
    ):
        raise ValueError("malformed dataset CSV header")
    d = len(header) - 1
    X = np.empty((len(lines) - 1, d), dtype=np.int8)
    y = np.empty(len(lines) - 1, dtype=np.float64)
    for i, ln in enumerate(lines[1:]):
        parts = ln.split(",")
        X[i] = [int(p) for p in parts[:-1]]
        y[i] = float(parts[-1])
    return Dataset(X, y)

"""Sparse Fourier representation of Boolean functions and its structural
analyses: Walsh-Hadamard transforms, subcube restriction, the merged
staircase property (MSP) and its stable variants, marginal-signal
quantities, traversals, and vertex-cut analysis.

A function f on {-1,+1}^d is stored as a list of (subset, coefficient)
terms, f = sum_S alpha_S * chi_S with chi_S(x) = prod_{j in S} x_j.
Subsets use 1-based feature indices.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from . import rng
from .boolcube import Cell
from .errors import (
    ConstantFunction,
    DimensionMismatch,
    NoTraversal,
    NonPowerOfTwoLength,
    SearchCapExceeded,
    SparsityCapExceeded,
    UnknownVertex,
)

__all__ = [
    "SparseFourier",
    "CutAnalysis",
    "MspClosure",
    "wht",
    "inverse_wht",
    "restrict",
    "msp_closure",
    "msp_residual",
    "is_smsp",
    "sid_lambda",
    "smsp_lambda",
    "min_traversal",
    "cut_analysis",
    "random_coefficients",
    "parse_function",
    "format_function",
    "support_cells",
    "marginal_correlation",
]

# A restricted coefficient below this relative threshold is treated as an
# exact cancellation (floating-point guard).
CANCEL_RTOL = 1e-12

# Enumerating all subcubes over the support is exponential; refuse above
# this sparsity unless the caller raises the cap explicitly.
DEFAULT_SPARSITY_CAP = 16


Subset = FrozenSet[int]


def _canon_subset(s: Iterable[int]) -> Subset:
    out = frozenset(int(j) for j in s)
    if any(j < 1 for j in out):
        raise ValueError("feature indices are 1-based")
    return out


@dataclass(frozen=True)
class SparseFourier:
    """f = sum over terms (S, alpha_S) of alpha_S * chi_S on {-1,+1}^dim.

    Terms with coinciding subsets are summed and exact zeros dropped at
    construction, so the stored representation is unique.
    """

    terms: Tuple[Tuple[Subset, float], ...]
    dim: int

    def __post_init__(self):
        acc: Dict[Subset, float] = {}
        for s, a in self.terms:
            s = _canon_subset(s)
            acc[s] = acc.get(s, 0.0) + float(a)
        canon = tuple(
            sorted(
                ((s, a) for s, a in acc.items() if a != 0.0),
                key=lambda t: (len(t[0]), sorted(t[0])),
            )
        )
        if canon and max((max(s) for s, _ in canon if s), default=0) > self.dim:
            raise DimensionMismatch("term subset exceeds declared dimension")
        object.__setattr__(self, "terms", canon)

    # -- basic queries ------------------------------------------------

    @property
    def support(self) -> Subset:
        """Union of all term subsets (relevant features S*)."""
        out: set = set()
        for s, _ in self.terms:
            out |= s
        return frozenset(out)

    @property
    def sparsity(self) -> int:
        return len(self.support)

    @property
    def vertices(self) -> Tuple[Subset, ...]:
        """Nonconstant term subsets (Fourier-graph vertices besides the
        empty set)."""
        return tuple(s for s, _ in self.terms)

    def coefficient(self, s: Iterable[int]) -> float:
        s = _canon_subset(s)
        for t, a in self.terms:
            if t == s:
                return a
        return 0.0

    @property
    def mean(self) -> float:
        return self.coefficient(())

    @property
    def variance(self) -> float:
        """Var f(X) under the uniform measure = sum of squared nonconstant
        coefficients (Parseval)."""
        return sum(a * a for s, a in self.terms if s)

    @property
    def inf_norm_upper(self) -> float:
        """L1 norm of coefficients; an upper bound on the sup norm."""
        return sum(abs(a) for _, a in self.terms)

    def is_constant(self) -> bool:
        return all(not s for s, _ in self.terms)

    def stable_hash(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.dim).encode())
        for s, a in self.terms:
            h.update(repr(sorted(s)).encode())
            h.update(f"{a:.17g}".encode())
        return h.hexdigest()[:16]

    # -- evaluation ---------------------------------------------------

    def evaluate(self, x) -> float:
        x = np.asarray(x)
        if x.shape != (self.dim,):
            raise DimensionMismatch(
                f"point has shape {x.shape}, expected ({self.dim},)"
            )
        total = 0.0
        for s, a in self.terms:
            prod = 1.0
            for j in s:
                prod *= x[j - 1]
            total += a * prod
        return total

    def evaluate_rows(self, X: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over an (n, d) sign matrix."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionMismatch(
                f"rows have {X.shape[-1]} coordinates, expected {self.dim}"
            )
        out = np.zeros(X.shape[0])
        for s, a in self.terms:
            if not s:
                out += a
                continue
            cols = [j - 1 for j in sorted(s)]
            out += a * X[:, cols].prod(axis=1)
        return out

    def __add__(self, other: "SparseFourier") -> "SparseFourier":
        if other.dim != self.dim:
            raise DimensionMismatch("cannot add functions of different dims")
        return SparseFourier(self.terms + other.terms, self.dim)


# -- Walsh-Hadamard transform ------------------------------------------
#
# Truth-table bit order (frozen): table index bit b (0 = least significant)
# encodes coordinate x_{b+1}, with bit value 0 meaning x = +1 and bit
# value 1 meaning x = -1.


def table_index_to_point(i: int, s: int) -> np.ndarray:
    """Point of {-1,+1}^s encoded by truth-table index i."""
    return np.array([1 if not (i >> b) & 1 else -1 for b in range(s)],
                    dtype=np.int8)


def wht(table: Sequence[float]) -> SparseFourier:
    """Fourier coefficients of a full truth table over {-1,+1}^s.

    alpha_S = 2^-s * sum_x f(x) chi_S(x), computed with the fast
    in-place butterfly.
    """
    vals = np.asarray(table, dtype=np.float64).copy()
    m = vals.size
    if m == 0 or m & (m - 1):
        raise NonPowerOfTwoLength(f"table length {m} is not a power of two")
    s = m.bit_length() - 1
    h = 1
    while h < m:
        for start in range(0, m, 2 * h):
            a = vals[start:start + h].copy()
            b = vals[start + h:start + 2 * h].copy()
            vals[start:start + h] = a + b
            vals[start + h:start + 2 * h] = a - b
        h *= 2
    vals /= m
    terms = []
    for mask in range(m):
        if vals[mask] != 0.0:
            subset = frozenset(b + 1 for b in range(s) if (mask >> b) & 1)
            terms.append((subset, float(vals[mask])))
    return SparseFourier(tuple(terms), max(s, 1))


def inverse_wht(f: SparseFourier, s: Optional[int] = None) -> np.ndarray:
    """Truth table of f over its first s coordinates (default: dim).

    Exact inverse of `wht` for functions supported on 1..s.
    """
    if s is None:
        s = f.dim
    if f.support and max(f.support) > s:
        raise DimensionMismatch("function touches coordinates beyond 1..s")
    m = 1 << s
    out = np.zeros(m)
    for subset, a in f.terms:
        mask = 0
        for j in subset:
            mask |= 1 << (j - 1)
        # chi_S at index i is (-1)^popcount(i & mask)
        signs = np.array(
            [1.0 if bin(i & mask).count("1") % 2 == 0 else -1.0
             for i in range(m)]
        )
        out += a * signs
    return out


# -- restriction -------------------------------------------------------


def restrict(f: SparseFourier, cell: Cell) -> SparseFourier:
    """Restriction f|_C as a function on the same ambient cube.

    alpha^C_S = sum over U with U \\ J(C) = S of (prod of fixed signs in
    U cap J(C)) * alpha_U.  Coefficients cancelled to within CANCEL_RTOL
    of the largest input coefficient are dropped as exact zeros.
    """
    if cell.dim != f.dim:
        raise DimensionMismatch(f"cell dim {cell.dim} != function dim {f.dim}")
    fixed = cell.constraint_map
    acc: Dict[Subset, float] = {}
    for s, a in f.terms:
        sign = 1
        for j in s:
            if j in fixed:
                sign *= fixed[j]
        new_s = frozenset(j for j in s if j not in fixed)
        acc[new_s] = acc.get(new_s, 0.0) + sign * a
    if not acc:
        return SparseFourier((), f.dim)
    tol = CANCEL_RTOL * max(abs(a) for _, a in f.terms) if f.terms else 0.0
    terms = tuple((s, a) for s, a in acc.items() if abs(a) > tol)
    return SparseFourier(terms, f.dim)


# -- MSP closure and residual -------------------------------------------


@dataclass(frozen=True)
class MspClosure:
    """Fixed point of absorbing vertices that add at most one new feature."""

    reachable: FrozenSet[Subset]
    covered: Subset
    is_msp: bool


def msp_closure(f: SparseFourier) -> MspClosure:
    """Connected component of the empty set in the Fourier graph.

    Starting from covered = {} we repeatedly absorb any vertex S with
    |S \\ covered| <= 1; the result is the fixed point and is independent
    of absorption order (the absorbable set only grows as coverage grows).
    """
    return _closure_over(set(f.vertices))


def _closure_over(pending: set) -> MspClosure:
    reachable: set = set()
    covered: set = set()
    pending = set(pending)
    changed = True
    while changed:
        changed = False
        for s in sorted(pending, key=lambda t: (len(t), sorted(t))):
            if len(s - covered) <= 1:
                reachable.add(s)
                covered |= s
                pending.remove(s)
                changed = True
    return MspClosure(frozenset(reachable), frozenset(covered),
                      is_msp=not pending)


def msp_residual(f: SparseFourier) -> SparseFourier:
    """Part of f carried by vertices disconnected from the empty set."""
    closure = msp_closure(f)
    terms = tuple((s, a) for s, a in f.terms if s and s not in closure.reachable)
    return SparseFourier(terms, f.dim)


# -- subcube enumeration over the support --------------------------------
#
# Constraining a feature outside the support leaves the restriction's term
# structure unchanged, so enumerating the 3^s cells that fix only support
# coordinates is exact for SMSP / SID / SMSP(lambda).  (Spot-checked
# against full-cell enumeration in the test suite.)


def support_cells(f: SparseFourier, cap: int = DEFAULT_SPARSITY_CAP):
    """All cells whose fixed features lie in the support of f (3^s cells,
    including the full cube)."""
    s_star = sorted(f.support)
    if len(s_star) > cap:
        raise SparsityCapExceeded(
            f"sparsity {len(s_star)} exceeds cap {cap}"
        )
    for signs in itertools.product((None, -1, 1), repeat=len(s_star)):
        constraints = tuple(
            (k, z) for k, z in zip(s_star, signs) if z is not None
        )
        yield Cell(f.dim, constraints)


def is_smsp(f: SparseFourier, cap: int = DEFAULT_SPARSITY_CAP) -> bool:
    """True iff the restriction to every support subcube is MSP."""
    for cell in support_cells(f, cap):
        if not msp_closure(restrict(f, cell)).is_msp:
            return False
    return True


def marginal_correlation(f: SparseFourier, cell: Cell, k: int) -> float:
    """Squared correlation of f(X) with X_k under the uniform measure on
    `cell`: Cov = restricted singleton coefficient, Var by Parseval."""
    g = restrict(f, cell)
    var = g.variance
    if var <= 0:
        raise ConstantFunction("f is constant on this cell")
    cov = g.coefficient((k,))
    return cov * cov / var


def sid_lambda(f: SparseFourier, cap: int = DEFAULT_SPARSITY_CAP) -> float:
    """Sufficient-impurity-decrease constant: the worst best squared
    conditional correlation over nonconstant support subcubes."""
    best_worst = None
    for cell in support_cells(f, cap):
        g = restrict(f, cell)
        var = g.variance
        if var <= 0:
            continue
        best = max(
            (a * a for s, a in g.terms if len(s) == 1),
            default=0.0,
        )
        score = best / var
        if best_worst is None or score < best_worst:
            best_worst = score
    if best_worst is None:
        raise ConstantFunction("function has no cell with positive variance")
    return best_worst


def smsp_lambda(f: SparseFourier, cap: int = DEFAULT_SPARSITY_CAP) -> float:
    """Stable-MSP constant: worst case over nonconstant support subcubes of
    the best squared conditional covariance, scaled by 2^-|J(C) cap S*|."""
    s_star = f.support
    best_worst = None
    for cell in support_cells(f, cap):
        g = restrict(f, cell)
        if g.variance <= 0:
            continue
        best = max(
            (a * a for s, a in g.terms if len(s) == 1),
            default=0.0,
        )
        scale = 2.0 ** -len(cell.fixed_features & s_star)
        score = best * scale
        if best_worst is None or score < best_worst:
            best_worst = score
    if best_worst is None:
        raise ConstantFunction("function has no cell with positive variance")
    return best_worst


# -- traversals and vertex cuts -------------------------------------------


def min_traversal(targets: Iterable[Iterable[int]],
                  forbidden: Iterable[int] = (),
                  max_size: int = 8) -> Tuple[FrozenSet[int], int]:
    """Minimum-cardinality feature set T, disjoint from `forbidden`, with
    |T cap S| >= 2 for every target S.

    Exhaustive search by subset size over the union of eligible target
    features; ties broken lexicographically.
    """
    targets = [frozenset(_canon_subset(s)) for s in targets]
    forbidden = _canon_subset(forbidden)
    if not targets:
        return frozenset(), 0
    eligible = [s - forbidden for s in targets]
    if any(len(e) < 2 for e in eligible):
        raise NoTraversal(
            "some target has fewer than 2 features outside the forbidden set"
        )
    universe = sorted(set().union(*eligible))
    for size in range(2, max_size + 1):
        if size > len(universe):
            break
        for combo in itertools.combinations(universe, size):
            t = frozenset(combo)
            if all(len(t & e) >= 2 for e in eligible):
                return t, size
    if len(universe) > max_size:
        raise SearchCapExceeded(
            f"no traversal of size <= {max_size}; universe has "
            f"{len(universe)} features"
        )
    raise NoTraversal("no traversal exists within the eligible features")


@dataclass(frozen=True)
class CutAnalysis:
    """Effect of removing a vertex set B from the Fourier graph."""

    cut: FrozenSet[Subset]
    cut_weight: float
    msp_component: FrozenSet[Subset]
    disconnected: FrozenSet[Subset]
    covered_features: Subset

    @property
    def covered_size(self) -> int:
        return len(self.covered_features)

    def disconnected_weight(self, f: "SparseFourier") -> float:
        return sum(a * a for s, a in f.terms if s in self.disconnected)


def cut_analysis(f: SparseFourier, cut: Iterable[Iterable[int]]) -> CutAnalysis:
    """Closure of the Fourier graph after deleting the vertices in `cut`.

    Partitions the nonconstant vertices into (cut, reachable-from-empty,
    disconnected) and reports the cut weight sum of alpha_S^2.
    """
    cut_set = frozenset(frozenset(_canon_subset(s)) for s in cut)
    vertices = set(f.vertices)
    unknown = {s for s in cut_set if s not in vertices}
    if unknown:
        names = ", ".join(str(sorted(s)) for s in sorted(unknown, key=sorted))
        raise UnknownVertex(f"cut names unknown vertices: {names}")
    closure = _closure_over(vertices - cut_set)
    disconnected = frozenset(vertices - cut_set - closure.reachable)
    weight = sum(a * a for s, a in f.terms if s in cut_set)
    return CutAnalysis(
        cut=cut_set,
        cut_weight=weight,
        msp_component=closure.reachable,
        disconnected=disconnected,
        covered_features=closure.covered,
    )


def random_coefficients(supports: Iterable[Iterable[int]], seed: int,
                        dim: Optional[int] = None) -> SparseFourier:
    """Continuous random coefficients on the given supports: magnitude
    uniform on [0.5, 1.5] with an independent random sign, per seed."""
    supports = [frozenset(_canon_subset(s)) for s in supports]
    if not supports:
        raise ValueError("supports must be nonempty")
    if dim is None:
        dim = max((max(s) for s in supports if s), default=1)
    gen = rng.stream(seed, "coefficients")
    terms = []
    for s in sorted(supports, key=lambda t: (len(t), sorted(t))):
        mag = gen.uniform(0.5, 1.5)
        sign = 1.0 if gen.integers(0, 2) else -1.0
        terms.append((s, sign * mag))
    return SparseFourier(tuple(terms), dim)


# -- text and record formats ----------------------------------------------


def parse_function(text: str, dim: int) -> SparseFourier:
    """Parse the term grammar `coef*x<i>*x<j>... + ...` (bare coef = constant).

    Rejects duplicate subsets; zero-coefficient terms are dropped so that
    templated specs (an extra term whose coefficient sweeps through 0)
    stay parseable.
    """
    seen = set()
    terms = []
    stripped = text.strip()
    if not stripped:
        raise ValueError("empty function spec")
    for raw in stripped.split("+"):
        raw = raw.strip()
        if not raw:
            raise ValueError("empty term in function spec")
        parts = [p.strip() for p in raw.split("*")]
        try:
            coef = float(parts[0])
        except ValueError as exc:
            raise ValueError(f"bad coefficient in term {raw!r}") from exc
        subset = set()
        for p in parts[1:]:
            if not p.startswith("x"):
                raise ValueError(f"bad factor {p!r} in term {raw!r}")
            j = int(p[1:])
            if j in subset:
                raise ValueError(f"repeated feature x{j} in term {raw!r}")
            subset.add(j)
        key = frozenset(subset)
        if key in seen:
            raise ValueError(f"duplicate subset in term {raw!r}")
        seen.add(key)
        terms.append((key, coef))
    f = SparseFourier(tuple(terms), dim)
    return f


def format_function(f: SparseFourier) -> str:
    if not f.terms:
        return "0.0"
    parts = []
    for s, a in f.terms:
        factors = "".join(f"*x{j}" for j in sorted(s))
        parts.append(f"{a:g}{factors}")
    return " + ".join(parts)


def from_records(records, dim: int) -> SparseFourier:
    """Structured form: list of {"subset": [ints], "coef": float}, or the
    wrapped {"dim": ..., "terms": [...]} shape produced by to_records."""
    if isinstance(records, dict):
        records = records["terms"]
    seen = set()
    terms = []
    for rec in records:
        key = frozenset(_canon_subset(rec["subset"]))
        if key in seen:
            raise ValueError(f"duplicate subset {sorted(key)}")
        coef = float(rec["coef"])
        if coef == 0.0:
            raise ValueError(f"zero coefficient for subset {sorted(key)}")
        seen.add(key)
        terms.append((key, coef))
    return SparseFourier(tuple(terms), dim)


def to_records(f: SparseFourier) -> dict:
    return {
        "dim": f.dim,
        "terms": [
            {"subset": sorted(s), "coef": a} for s, a in f.terms
        ],
    }

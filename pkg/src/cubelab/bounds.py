"""Closed-form evaluators for the risk lower bounds, the threshold window,
and the rate expressions that the experiments are checked against.

Every evaluator returns a BoundReport carrying the echoed inputs, the
derived intermediate quantities, the smallest admissible delta, and the
bound value.  A delta >= 1 makes a lower bound vacuous; that is reported
as a flag, never as an exception.

All logarithms are natural unless the name says otherwise (sample-size
conditions are stated in log2 n).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from .errors import FunctionIsMsp, InvalidArgs
from .fourier import (
    SparseFourier,
    cut_analysis,
    min_traversal,
    msp_closure,
    msp_residual,
)

__all__ = [
    "BoundReport",
    "GammaWindow",
    "xor_bound",
    "nonmsp_bound",
    "robust_bound",
    "best_robust_bound",
    "gamma_window",
    "rate_values",
    "selection_prob_bounds",
]


@dataclass(frozen=True)
class BoundReport:
    tag: str
    inputs: Dict[str, object]
    derived: Dict[str, float]
    delta: float
    vacuous: bool
    bound: float
    ensemble_bound: Optional[float] = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "inputs": dict(self.inputs),
            "derived": dict(self.derived),
            "delta": self.delta,
            "vacuous": self.vacuous,
            "bound": self.bound,
            "ensemble_bound": self.ensemble_bound,
            "notes": self.notes,
        }

    def pretty(self) -> str:
        lines = [f"[{self.tag}]"]
        for name, val in self.inputs.items():
            lines.append(f"  input   {name} = {val}")
        for name, val in self.derived.items():
            lines.append(f"  derived {name} = {val:.12g}")
        lines.append(f"  delta = {self.delta:.12g}"
                     + ("  (vacuous: delta >= 1)" if self.vacuous else ""))
        lines.append(f"  risk lower bound = {self.bound:.12g}")
        if self.ensemble_bound is not None:
            lines.append(f"  ensemble bound   = {self.ensemble_bound:.12g}")
        if self.notes:
            lines.append(f"  note: {self.notes}")
        return "\n".join(lines)


def xor_bound(d: int, n: int, M: Optional[float] = None) -> BoundReport:
    """Risk lower bound for learning the two-feature parity at dimension d.

    The smallest admissible delta satisfies log2 n <= delta (d-1)/2 - 2,
    i.e. delta = 2 (log2 n + 2) / (d - 1); the single-tree bound is
    (1 - delta) Var = (1 - delta).  With a response bound M the ensemble
    bound is (1 - kappa delta) with kappa = 2M (Var = 1).
    """
    if d < 3:
        raise InvalidArgs("xor_bound needs d >= 3")
    if n < 1:
        raise InvalidArgs("n must be >= 1")
    delta = 2.0 * (math.log2(n) + 2.0) / (d - 1)
    vacuous = delta >= 1.0
    bound = 0.0 if vacuous else (1.0 - delta)
    derived = {"log2_n": math.log2(n), "var": 1.0}
    ensemble = None
    if M is not None:
        kappa = 2.0 * M
        derived["kappa"] = kappa
        ensemble = max(0.0, 1.0 - kappa * delta)
    return BoundReport("xor", {"d": d, "n": n, "M": M}, derived,
                       delta, vacuous, bound, ensemble)


def nonmsp_bound(f: SparseFourier, d: int, n: int,
                 M: Optional[float] = None) -> BoundReport:
    """Risk lower bound for any non-MSP target.

    Derived quantities: s_MSP = features covered by the MSP component,
    s_T = minimal traversal of the disconnected vertices avoiding the MSP
    features, Var{r} = squared-coefficient weight of the disconnected
    part.  delta = s_T (log2 n + 2) / (d - s_MSP - s_T + 1); bound
    (1 - delta) Var{r}.
    """
    if f.dim != d:
        raise InvalidArgs(f"function has dim {f.dim}, got d={d}")
    closure = msp_closure(f)
    if closure.is_msp:
        raise FunctionIsMsp("target is MSP; the non-MSP bound is undefined")
    residual = msp_residual(f)
    targets = tuple(s for s, _ in residual.terms if s)
    traversal, s_t = min_traversal(targets, forbidden=closure.covered)
    s_msp = len(closure.covered)
    var_r = residual.variance
    if d - s_msp - s_t + 1 <= 0:
        raise InvalidArgs("dimension too small for the stated condition")
    delta = s_t * (math.log2(n) + 2.0) / (d - s_msp - s_t + 1)
    vacuous = delta >= 1.0
    bound = 0.0 if vacuous else (1.0 - delta) * var_r
    derived = {"s_msp": float(s_msp), "s_t": float(s_t), "var_r": var_r,
               "log2_n": math.log2(n)}
    ensemble = None
    if M is not None:
        var_f = f.variance
        kappa = 2.0 * M / math.sqrt(var_f)
        derived["kappa"] = kappa
        ensemble = max(0.0, (1.0 - kappa * delta) * var_r)
    return BoundReport("nonmsp", {"d": d, "n": n, "M": M,
                                  "traversal": sorted(traversal)},
                       derived, delta, vacuous, bound, ensemble)


def robust_bound(f: SparseFourier, B: Iterable[FrozenSet[int]], d: int,
                 n: int, sigma: float) -> BoundReport:
    """Noise-robust risk lower bound after deleting the vertex set B.

    The sample condition is
        log2 n <= min{ delta (d - s_B_msp - s_t) / (2 s_t) - 2,
                       log2(delta^2 sigma^2 / w(B)) - 1 }
    so the smallest admissible delta is the larger of
        delta1 = 2 s_t (log2 n + 2) / (d - s_B_msp - s_t)
        delta2 = sqrt(2 n w(B)) / sigma      (0 when B is empty).
    Bound: (1 - delta) * w of the part neither deleted nor MSP-connected.

    Note the first condition's denominator lacks the +1 and carries the
    extra factor 2 relative to the noiseless non-MSP bound; the two are
    evaluated exactly as stated, without harmonizing.
    """
    if sigma <= 0:
        raise InvalidArgs("robust bound needs sigma > 0")
    if f.dim != d:
        raise InvalidArgs(f"function has dim {f.dim}, got d={d}")
    analysis = cut_analysis(f, B)
    disconnected = analysis.disconnected
    if not disconnected:
        raise FunctionIsMsp(
            "after deleting B the remainder is MSP; bound is undefined"
        )
    targets = tuple(disconnected)
    s_b_msp = analysis.covered_size
    traversal, s_t = min_traversal(targets,
                                   forbidden=analysis.covered_features)
    w_b = analysis.cut_weight
    w_rest = analysis.disconnected_weight(f)
    denom = d - s_b_msp - s_t
    if denom <= 0:
        raise InvalidArgs("dimension too small for the stated condition")
    delta1 = 2.0 * s_t * (math.log2(n) + 2.0) / denom
    delta2 = math.sqrt(2.0 * n * w_b) / sigma if w_b > 0 else 0.0
    delta = max(delta1, delta2)
    vacuous = delta >= 1.0
    bound = 0.0 if vacuous else (1.0 - delta) * w_rest
    return BoundReport(
        "robust",
        {"d": d, "n": n, "sigma": sigma,
         "B": sorted(sorted(s) for s in analysis.cut),
         "traversal": sorted(traversal)},
        {"s_b_msp": float(s_b_msp), "s_t": float(s_t),
         "w_b": w_b, "w_rest": w_rest,
         "delta1": delta1, "delta2": delta2},
        delta, vacuous, bound,
    )


def best_robust_bound(f: SparseFourier, d: int, n: int,
                      sigma: float) -> BoundReport:
    """Maximize robust_bound over all deletable vertex subsets B.

    Exhaustive over subsets of the nonconstant support (sparsity <= 12).
    Subsets whose deletion leaves an MSP remainder are skipped; if every
    subset does, the all-vacuous report for B = empty set is returned.
    """
    vertices = [s for s, _ in f.terms if s]
    if len(vertices) > 12:
        raise InvalidArgs("support too large for exhaustive subset search")
    best: Optional[BoundReport] = None
    for r in range(len(vertices) + 1):
        for combo in itertools.combinations(vertices, r):
            try:
                report = robust_bound(f, combo, d, n, sigma)
            except FunctionIsMsp:
                continue
            if best is None or report.bound > best.bound:
                best = report
    if best is None:
        raise FunctionIsMsp("every deletion leaves an MSP remainder")
    return best


@dataclass(frozen=True)
class GammaWindow:
    tau: float
    gamma_min: Optional[float]
    gamma_max: Optional[float]

    @property
    def empty(self) -> bool:
        return self.gamma_min is None

    def contains(self, gamma: float) -> bool:
        return (not self.empty
                and self.gamma_min <= gamma < self.gamma_max)


def gamma_window(f_inf_norm: float, sigma: float, s: int, d: int, n: int,
                 lam: float) -> GammaWindow:
    """Admissible stopping-threshold window for consistent recovery.

    tau = 18 (9 ||f||_inf^2 + sigma^2) ((s + 2) ln 3 + ln(2 d n)); the
    window is [tau/n, (sqrt(lam/2) - sqrt(tau/n))_+^2), empty whenever
    n <= 8 tau / lam or the interval degenerates.
    """
    if lam <= 0:
        raise InvalidArgs("lambda must be positive")
    if n < 1 or d < 1 or s < 0:
        raise InvalidArgs("need n >= 1, d >= 1, s >= 0")
    tau = 18.0 * (9.0 * f_inf_norm ** 2 + sigma ** 2) * (
        (s + 2) * math.log(3.0) + math.log(2.0 * d * n)
    )
    if n <= 8.0 * tau / lam:
        return GammaWindow(tau, None, None)
    lo = tau / n
    hi = max(0.0, math.sqrt(lam / 2.0) - math.sqrt(tau / n)) ** 2
    if hi <= lo:
        return GammaWindow(tau, None, None)
    return GammaWindow(tau, lo, hi)


def rate_values(s: int, d: int, n: int, sigma: float,
                M: float) -> Dict[str, float]:
    """Constant-free rate expressions — order-of-magnitude guides only.

    minimax:    2^s sigma^2 ln d / n
    erm:        (sigma^2 + M^2)(2^s ln d + ln n) / n
    cart_upper: 2^s (M^2 + sigma^2)(s + ln n) / n
    na_sample_cap: largest n with n <= 2^{delta d / s} at delta = 1
                   (the non-adaptive condition ceiling), reported as
                   log2 form d / s.
    """
    if min(s, d, n) <= 0 or sigma < 0 or M <= 0:
        raise InvalidArgs("arguments must be positive (sigma >= 0)")
    return {
        "minimax": 2.0 ** s * sigma ** 2 * math.log(d) / n,
        "erm": (sigma ** 2 + M ** 2) * (2.0 ** s * math.log(d)
                                        + math.log(n)) / n,
        "cart_upper": 2.0 ** s * (M ** 2 + sigma ** 2)
        * (s + math.log(n)) / n,
        "na_log2_sample_cap": d / s,
    }


def selection_prob_bounds(kind: str, **args) -> float:
    """Probability/size bounds used by the validation suites.

    kind = "xor":          2 (log2 n + 2) / (d - 1)          needs d, n
    kind = "nonmsp":       s_t (log2 n + 2)/(d - s_msp - s_t + 1)
                                                  needs d, n, s_msp, s_t
    kind = "nonadaptive":  (s/d) log2 n                      needs s, d, n
    kind = "depth":        log2 n + 2                        needs n
    """
    try:
        if kind == "xor":
            d, n = args["d"], args["n"]
            return 2.0 * (math.log2(n) + 2.0) / (d - 1)
        if kind == "nonmsp":
            d, n = args["d"], args["n"]
            s_msp, s_t = args["s_msp"], args["s_t"]
            return s_t * (math.log2(n) + 2.0) / (d - s_msp - s_t + 1)
        if kind == "nonadaptive":
            s, d, n = args["s"], args["d"], args["n"]
            return (s / d) * math.log2(n)
        if kind == "depth":
            return math.log2(args["n"]) + 2.0
    except KeyError as missing:
        raise InvalidArgs(f"missing argument {missing} for kind {kind!r}")
    raise InvalidArgs(f"unknown kind {kind!r}")

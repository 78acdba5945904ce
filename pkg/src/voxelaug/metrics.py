"""Segmentation evaluation: per-class Dice and paired significance testing.

Dice follows the two-stage protocol: per-class overlap per subject, averaged
across classes ("global"), then averaged across subjects.  The paired test is
the classic Wilcoxon signed-rank: zero differences dropped, midranks for
ties, W = min(W⁺, W⁻), exact two-sided p (full enumeration over sign
assignments, computed by dynamic programming over doubled ranks) up to 25
effective pairs and a normal approximation with tie and continuity
corrections beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateDataError, GeometryError
from .volume import LabelMap

_ALPHA = 0.05
_EXACT_LIMIT = 25


@dataclass(frozen=True)
class DiceReport:
    """Per-class Dice values and their mean ("global" Dice) for one subject.

    ``global_dice`` always equals the arithmetic mean of ``per_class``.
    """

    per_class: Mapping[int, float]
    global_dice: float

    def __post_init__(self) -> None:
        if not self.per_class:
            raise ValueError("per_class must be nonempty")
        for c, v in self.per_class.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"Dice for class {c} outside [0, 1]: {v}")
        mean = sum(self.per_class.values()) / len(self.per_class)
        if abs(mean - self.global_dice) > 1e-12:
            raise ValueError("global_dice must equal the mean of per_class values")


@dataclass(frozen=True)
class StatResult:
    """Signed-rank test outcome: W = min(W⁺, W⁻), two-sided p, effective n."""

    statistic: float
    p_value: float
    n_effective: int
    significant: bool

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value outside [0, 1]: {self.p_value}")
        if self.significant != (self.p_value < _ALPHA):
            raise ValueError("significant flag inconsistent with p_value")


def dice_per_class(pred: LabelMap, ref: LabelMap, classes: Sequence[int] = (1, 2, 3)) -> DiceReport:
    """Dice_c = 2|P∩R| / (|P|+|R|) for each class; both-empty counts as 1.0.

    Prediction and reference must share geometry (dims exactly, affine to
    1e-5); ``global_dice`` is the mean over the requested classes.
    """
    wanted = sorted({int(c) for c in classes})
    if not wanted:
        raise ValueError("classes must be nonempty")
    if pred.dims != ref.dims:
        raise GeometryError(f"prediction dims {pred.dims} != reference dims {ref.dims}")
    if not np.allclose(pred.affine, ref.affine, rtol=1e-5, atol=1e-5):
        raise GeometryError("prediction and reference affines disagree beyond 1e-5")
    p_arr = pred.voxels
    r_arr = ref.voxels
    per_class: dict[int, float] = {}
    for c in wanted:
        p_mask = p_arr == c
        r_mask = r_arr == c
        p_n = int(np.count_nonzero(p_mask))
        r_n = int(np.count_nonzero(r_mask))
        if p_n + r_n == 0:
            per_class[c] = 1.0
            continue
        inter = int(np.count_nonzero(p_mask & r_mask))
        per_class[c] = 2.0 * inter / (p_n + r_n)
    return DiceReport(per_class, sum(per_class.values()) / len(per_class))


def aggregate_subjects(reports: Sequence[DiceReport]) -> float:
    """Mean of the subjects' global Dice values (the second averaging stage)."""
    if not reports:
        raise ValueError("need at least one subject report to aggregate")
    return sum(r.global_dice for r in reports) / len(reports)


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing their average rank."""
    uniq, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    mid = (starts + ends) / 2.0
    return mid[inverse]


def _exact_two_sided_p(ranks: np.ndarray, w: float) -> float:
    """Enumerate the null distribution of W⁺ over all 2ⁿ sign assignments.

    Works on doubled ranks (integers even with midrank ties); counts stay
    exact in float64 for n ≤ 25, so the returned p is the exact dyadic
    rational 2·min(P(W⁺ ≤ w), P(W⁺ ≥ w)) capped at 1.
    """
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(r2.sum())
    dist = np.zeros(total + 1, dtype=np.float64)
    dist[0] = 1.0
    for r in r2:
        shifted = dist.copy()
        shifted[r:] += dist[: total + 1 - r]
        dist = shifted
    dist /= 2.0 ** len(r2)
    s2 = int(np.rint(2.0 * w))
    cdf = float(dist[: s2 + 1].sum())
    sf = float(dist[s2:].sum())
    return min(1.0, 2.0 * min(cdf, sf))


def _approx_two_sided_p(ranks: np.ndarray, w: float, n: int) -> float:
    """Normal approximation with tie correction and continuity correction."""
    mu = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(((counts.astype(np.float64) ** 3) - counts).sum()) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    z = (w - mu + 0.5) / math.sqrt(var)
    p = math.erfc(-z / math.sqrt(2.0))  # = 2·Φ(z)
    return min(1.0, p)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Two-sided Wilcoxon signed-rank test on paired observations.

    Zero differences are dropped (``n_effective`` reports what remains; all
    zeros is a degenerate-data error).  Swapping the inputs leaves both W and
    p unchanged, and p depends only on the differences a−b.
    """
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"paired lists differ in length: {x.size} vs {y.size}")
    if x.size == 0:
        raise ValueError("paired lists must be nonempty")
    d = x - y
    d = d[d != 0.0]
    n = int(d.size)
    if n == 0:
        raise DegenerateDataError("all paired differences are zero; no signal to test")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if n <= _EXACT_LIMIT:
        p = _exact_two_sided_p(ranks, w)
    else:
        p = _approx_two_sided_p(ranks, w, n)
    return StatResult(w, p, n, p < _ALPHA)

"""
Slope Process
Breakpoint set of pairwise slopes and the right-continuous step function b -> G(y;b).
"""

import sys
import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import get_ranking_rule
from services.errors import ProblemTooLarge
from services.ranks_gini import GiniValue, Real, Sample, gini_at, gini_from_score

logger = logging.getLogger(__name__)

STEP_METHODS = ("direct", "incremental")

Pair = Tuple[int, int]


@dataclass(frozen=True)
class BreakpointSet:
    """Sorted distinct pairwise slopes with the (1-based) index pairs realising each.

    For float samples a breakpoint stands for a cluster of slopes equal within
    the tie threshold; ``spans`` holds the (lowest, highest) slope of each.
    """

    breakpoints: Tuple[Real, ...]
    groups: Tuple[Tuple[Pair, ...], ...]
    spans: Optional[Tuple[Tuple[Real, Real], ...]] = None

    @property
    def r(self) -> int:
        return len(self.breakpoints)

    @property
    def upper_ends(self) -> Tuple[Real, ...]:
        if self.spans is None:
            return self.breakpoints
        return tuple(hi for _, hi in self.spans)

    def pair_count(self) -> int:
        return sum(len(g) for g in self.groups)

    def group_at(self, value: Real) -> Tuple[Pair, ...]:
        k = self.breakpoints.index(value)
        return self.groups[k]


def _check_size(sample: Sample, max_n: Optional[int]) -> None:
    limit = get_ranking_rule("step_function_max_n") if max_n is None else max_n
    if sample.n > limit:
        raise ProblemTooLarge(
            f"N={sample.n} exceeds the slope-table guard of {limit}; raise COGRAD_STEP_MAX_N to override"
        )


def _float_slopes(sample: Sample):
    i, j = np.triu_indices(sample.n, 1)
    x, y = sample.x_array, sample.y_array
    return (y[j] - y[i]) / (x[j] - x[i]), i, j


def _float_group_starts(sample: Sample, ordered: np.ndarray, spacing: np.ndarray,
                        tolerance: Optional[float]) -> np.ndarray:
    """Indices where a new slope cluster begins in sorted float slopes.

    A boundary is kept only if, halfway between its neighbours, every pair
    (i, j) has |P_ij - b| * (x_j - x_i) above twice the tie threshold at b.
    """
    a, s = sample.tie_terms(tolerance)
    reach = 2.0 * (a + float(np.max(np.abs(ordered))) * s) / spacing
    mid = (ordered[:-1] + ordered[1:]) / 2
    left = np.maximum.accumulate(ordered + reach)[:-1]
    right = np.minimum.accumulate((ordered - reach)[::-1])[::-1][1:]
    new_group = (left < mid) & (right > mid)
    return np.concatenate(([0], np.nonzero(new_group)[0] + 1))


def _float_clusters(sample: Sample, tolerance: Optional[float]):
    slopes, ii, jj = _float_slopes(sample)
    order = np.argsort(slopes, kind="stable")
    ordered = slopes[order]
    spacing = (sample.x_array[jj] - sample.x_array[ii])[order]
    starts = _float_group_starts(sample, ordered, spacing, tolerance)
    ends = np.concatenate((starts[1:], [len(ordered)]))
    return ordered, order, starts, ends, ii, jj


def enumerate_breakpoints(sample: Sample, tolerance: Optional[float] = None,
                          max_n: Optional[int] = None) -> BreakpointSet:
    """All N(N-1)/2 slopes P_ij, sorted and grouped by equal value."""
    _check_size(sample, max_n)
    n = sample.n

    if sample.exact:
        grouped: Dict[Fraction, List[Pair]] = {}
        for i in range(n):
            xi, yi = sample.x[i], sample.y[i]
            for j in range(i + 1, n):
                slope = (sample.y[j] - yi) / (sample.x[j] - xi)
                grouped.setdefault(slope, []).append((i + 1, j + 1))
        keys = sorted(grouped)
        return BreakpointSet(tuple(keys), tuple(tuple(grouped[k]) for k in keys))

    ordered, order, starts, ends, ii, jj = _float_clusters(sample, tolerance)
    breakpoints = []
    groups = []
    spans = []
    for s, e in zip(starts, ends):
        idx = order[s:e]
        breakpoints.append(float(ordered[s]))
        spans.append((float(ordered[s]), float(ordered[e - 1])))
        groups.append(tuple(sorted((int(ii[k]) + 1, int(jj[k]) + 1) for k in idx)))
    if len(breakpoints) < len(ordered):
        logger.debug(f"Float slopes: {len(ordered)} pairs in {len(breakpoints)} clusters")
    return BreakpointSet(tuple(breakpoints), tuple(groups), tuple(spans))


def slope_spans(sample: Sample, tolerance: Optional[float] = None,
                max_n: Optional[int] = None) -> Tuple[list, list]:
    """(lowest, highest) slope of each breakpoint cluster, without pair bookkeeping."""
    _check_size(sample, max_n)
    if sample.exact:
        n = sample.n
        slopes = sorted({
            (sample.y[j] - sample.y[i]) / (sample.x[j] - sample.x[i])
            for i in range(n) for j in range(i + 1, n)
        })
        return slopes, slopes
    ordered, _, starts, ends, _, _ = _float_clusters(sample, tolerance)
    return ordered[starts].tolist(), ordered[ends - 1].tolist()


def distinct_slopes(sample: Sample, tolerance: Optional[float] = None,
                    max_n: Optional[int] = None):
    """Sorted distinct breakpoints without the pair bookkeeping."""
    return slope_spans(sample, tolerance, max_n)[0]


def edge_margin(sample: Sample, edge: Real, tolerance: Optional[float] = None) -> Real:
    """Distance past an outer breakpoint at which residuals are safely untied."""
    if sample.exact:
        return 1
    a, s = sample.tie_terms(tolerance)
    return max(1.0, 4.0 * (a + abs(float(edge)) * s) / sample.min_spacing)


def cluster_representatives(sample: Sample, lows: Sequence[Real], highs: Sequence[Real],
                            tolerance: Optional[float] = None) -> List[Real]:
    """A point inside each of the r + 1 intervals, between clusters for float samples."""
    r = len(lows)
    points = [lows[0] - edge_margin(sample, lows[0], tolerance)]
    points.extend((highs[k] + lows[k + 1]) / 2 for k in range(r - 1))
    points.append(highs[-1] + edge_margin(sample, highs[-1], tolerance))
    return points


@dataclass(frozen=True)
class GiniStepFunction:
    """Values v_0..v_r of G on [b(k), b(k+1)), with b(0) = -inf and b(r+1) = +inf."""

    breakpoints: Tuple[Real, ...]
    values: Tuple[GiniValue, ...]
    n: int
    rank_history: Optional[Tuple[Tuple[int, ...], ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError(f"{len(self.breakpoints)} breakpoints need {len(self.breakpoints) + 1} values")
        if self.values[0] != 1 or self.values[-1] != -1:
            raise ValueError(f"Step function must run from 1 to -1, got {self.values[0]} .. {self.values[-1]}")

    @property
    def r(self) -> int:
        return len(self.breakpoints)

    def interval(self, k: int) -> Tuple[Real, Real]:
        """Bounds of the k-th interval [left, right)."""
        left = float("-inf") if k == 0 else self.breakpoints[k - 1]
        right = float("inf") if k == self.r else self.breakpoints[k]
        return left, right

    def is_nonincreasing(self) -> bool:
        return all(a >= b for a, b in zip(self.values, self.values[1:]))

    def trace_records(self) -> List[Tuple[Real, Real, int, int]]:
        """(interval_left, interval_right, value_numerator, value_denominator) per interval."""
        records = []
        for k, value in enumerate(self.values):
            left, right = self.interval(k)
            f = value.fraction
            records.append((left, right, f.numerator, f.denominator))
        return records

    def rank_table(self) -> Optional[Tuple[Tuple[int, ...], ...]]:
        """Residual ranks per interval, recorded by the incremental builder."""
        return self.rank_history


def evaluate(step: GiniStepFunction, b: Real) -> GiniValue:
    """Right-continuous value of G at b."""
    return step.values[bisect_right(step.breakpoints, b)]


def interval_representatives(breakpoints: Sequence[Real]) -> List[Real]:
    """A point strictly inside each of the r + 1 intervals."""
    r = len(breakpoints)
    points = [breakpoints[0] - 1]
    points.extend((breakpoints[k] + breakpoints[k + 1]) / 2 for k in range(r - 1))
    points.append(breakpoints[-1] + 1)
    return points


def _collinear_families(pairs: Sequence[Pair]) -> List[Tuple[List[int], int]]:
    """Connected components of the pairs as (sorted 0-based indices, pair count)."""
    parent: Dict[int, int] = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in pairs:
        parent.setdefault(i, i)
        parent.setdefault(j, j)
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    families: Dict[int, List[int]] = {}
    for v in parent:
        families.setdefault(find(v), []).append(v - 1)
    counts: Dict[int, int] = {}
    for i, _ in pairs:
        root = find(i)
        counts[root] = counts.get(root, 0) + 1
    return [(sorted(families[root]), counts[root]) for root in sorted(families)]


def _representatives(sample: Sample, bps: BreakpointSet) -> List[Real]:
    return cluster_representatives(sample, bps.breakpoints, bps.upper_ends)


def _build_direct(sample: Sample, bps: BreakpointSet) -> GiniStepFunction:
    values = [gini_at(sample, b) for b in _representatives(sample, bps)]
    return GiniStepFunction(bps.breakpoints, tuple(values), sample.n)


def _term(n: int, i: int, r: int) -> int:
    # i and r are 1-based
    return abs(n + 1 - i - r) - abs(i - r)


def _reverse_family(ranks: List[int], family: List[int], value: Real) -> List[Tuple[int, int]]:
    """Rank update R + m - 2i for a family whose pairs all cross together."""
    m = len(family) - 1
    base = ranks[family[0]]
    for i, v in enumerate(family):
        if ranks[v] != base + i:
            raise RuntimeError(
                f"Rank bookkeeping broken at b={value}: family {family} has ranks "
                f"{[ranks[u] for u in family]}"
            )
    return [(v, ranks[v] + m - 2 * i) for i, v in enumerate(family)]


def _resort_family(ranks: List[int], family: List[int], residuals) -> List[Tuple[int, int]]:
    """Reassign the family's rank slots by residual order after the cluster."""
    slots = sorted(ranks[v] for v in family)
    ordered = sorted(family, key=lambda v: residuals[v])
    return list(zip(ordered, slots))


def _build_incremental(sample: Sample, bps: BreakpointSet, keep_ranks: bool) -> GiniStepFunction:
    n = sample.n
    ranks = list(range(1, n + 1))
    score = sum(_term(n, i + 1, ranks[i]) for i in range(n))
    values = [gini_from_score(score, n)]
    history = [tuple(ranks)] if keep_ranks else None
    points = None

    for k, (value, pairs) in enumerate(zip(bps.breakpoints, bps.groups)):
        residuals = None
        for family, count in _collinear_families(pairs):
            size = len(family)
            if count == size * (size - 1) // 2:
                updates = _reverse_family(ranks, family, value)
            else:
                # float cluster joining slopes that are not all equal
                if residuals is None:
                    points = points or _representatives(sample, bps)
                    residuals = sample.residuals(points[k + 1])
                updates = _resort_family(ranks, family, residuals)
            for v, new in updates:
                score += _term(n, v + 1, new) - _term(n, v + 1, ranks[v])
                ranks[v] = new
        values.append(gini_from_score(score, n))
        if keep_ranks:
            history.append(tuple(ranks))

    logger.debug(f"Incremental step function: N={n}, r={bps.r}")
    return GiniStepFunction(
        bps.breakpoints, tuple(values), n,
        rank_history=tuple(history) if keep_ranks else None,
    )


def build_step_function(sample: Sample, method: str = "incremental",
                        keep_ranks: bool = False, max_n: Optional[int] = None) -> GiniStepFunction:
    """Materialise b -> G(y;b) by direct evaluation or by rank updates."""
    if method not in STEP_METHODS:
        raise ValueError(f"Unknown step-function method {method!r}; use one of {STEP_METHODS}")
    bps = enumerate_breakpoints(sample, max_n=max_n)
    if method == "direct":
        return _build_direct(sample, bps)
    return _build_incremental(sample, bps, keep_ranks)

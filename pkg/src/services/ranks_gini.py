"""
Ranks and Gini Cograduation Index
Residual ranking and the index G(y;b) between residual ranks and design order.
"""

import sys
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, total_ordering
from numbers import Rational
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import get_ranking_rule
from services.errors import BreakpointHit, DuplicateAbscissa, InvalidSample, TiedValues

logger = logging.getLogger(__name__)

Real = Union[int, float, Fraction]


def denominator_for(n: int) -> int:
    """D = N^2 for even N, N^2 - 1 for odd N."""
    return n * n if n % 2 == 0 else n * n - 1


def _is_exact(values: Iterable) -> bool:
    return all(isinstance(v, Rational) for v in values)


def _to_exact(value: Real) -> Fraction:
    # float -> Fraction is exact on the binary value
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True)
class Sample:
    """Design points x (strictly increasing) paired with responses y.

    ``exact`` samples hold Fractions and are ranked with exact comparisons;
    float samples use the relative tie tolerance.
    """

    x: Tuple[Real, ...]
    y: Tuple[Real, ...]
    exact: bool = False

    def __post_init__(self):
        kind = _to_exact if self.exact else float
        object.__setattr__(self, "x", tuple(kind(v) for v in self.x))
        object.__setattr__(self, "y", tuple(kind(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise InvalidSample(f"x has {len(self.x)} values but y has {len(self.y)}")
        if len(self.x) < 2:
            raise InvalidSample(f"Need at least 2 observations, got {len(self.x)}")
        for i in range(1, len(self.x)):
            if self.x[i] == self.x[i - 1]:
                raise DuplicateAbscissa(f"Duplicate x value {self.x[i]} at positions {i} and {i + 1}")
            if self.x[i] < self.x[i - 1]:
                raise InvalidSample(f"x must be strictly increasing (position {i + 1})")
        if not self.exact:
            if not np.all(np.isfinite(np.asarray(self.x, dtype=float))) or \
                    not np.all(np.isfinite(np.asarray(self.y, dtype=float))):
                raise InvalidSample("x and y must be finite")

    @property
    def n(self) -> int:
        return len(self.x)

    @cached_property
    def x_array(self) -> np.ndarray:
        return np.asarray([float(v) for v in self.x], dtype=float)

    @cached_property
    def y_array(self) -> np.ndarray:
        return np.asarray([float(v) for v in self.y], dtype=float)

    @classmethod
    def from_strings(cls, xs: Sequence[str], ys: Sequence[str]) -> "Sample":
        """Parse decimal strings into exact rationals."""
        try:
            x = tuple(Fraction(str(v).strip()) for v in xs)
            y = tuple(Fraction(str(v).strip()) for v in ys)
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidSample(f"Cannot parse value as a decimal number: {e}") from e
        return cls(x, y, exact=True)

    @classmethod
    def from_floats(cls, xs: Iterable[float], ys: Iterable[float]) -> "Sample":
        return cls(tuple(float(v) for v in xs), tuple(float(v) for v in ys), exact=False)

    @classmethod
    def from_rows(cls, rows: Sequence[Tuple[str, str]], exact: bool = True) -> "Sample":
        """Build a sample from unsorted (x, y) rows, sorting by x."""
        if exact:
            parsed = cls._parse_rows(rows, Fraction)
        else:
            parsed = cls._parse_rows(rows, float)
        parsed.sort(key=lambda row: row[0])
        for (x0, _), (x1, _) in zip(parsed, parsed[1:]):
            if x0 == x1:
                raise DuplicateAbscissa(f"Duplicate x value {x0}")
        return cls(tuple(r[0] for r in parsed), tuple(r[1] for r in parsed), exact=exact)

    @staticmethod
    def _parse_rows(rows, kind):
        parsed = []
        for line, (x, y) in enumerate(rows, start=1):
            try:
                parsed.append((kind(str(x).strip()), kind(str(y).strip())))
            except (ValueError, ZeroDivisionError) as e:
                raise InvalidSample(f"Row {line}: cannot parse ({x!r}, {y!r}): {e}") from e
        return parsed

    @cached_property
    def min_spacing(self) -> float:
        """Smallest gap between consecutive design points."""
        return float(np.min(np.diff(self.x_array)))

    def tie_terms(self, tolerance: Optional[float] = None) -> Tuple[float, float]:
        """(A, B) such that float residuals at b tie when closer than A + |b|*B.

        The tolerance applies to the spread of x and y, so a constant added to y
        only moves the threshold through the rounding floor on the magnitudes.
        """
        tol = get_ranking_rule("tie_relative_tolerance") if tolerance is None else tolerance
        ulps = get_ranking_rule("tie_rounding_ulps") * np.finfo(float).eps
        x, y = self.x_array, self.y_array
        a = tol * float(np.ptp(y)) + ulps * float(np.max(np.abs(y)))
        b = tol * float(np.ptp(x)) + ulps * float(np.max(np.abs(x)))
        return a, b

    def tie_threshold(self, b: Real, tolerance: Optional[float] = None) -> float:
        a, s = self.tie_terms(tolerance)
        return a + abs(float(b)) * s

    def negated(self) -> "Sample":
        """Sample with responses -y."""
        return Sample(self.x, tuple(-v for v in self.y), exact=self.exact)

    def shifted(self, c: Real, d: Real) -> "Sample":
        """Sample with responses y + c + d*x."""
        if self.exact:
            c, d = _to_exact(c), _to_exact(d)
        return Sample(self.x, tuple(yi + c + d * xi for xi, yi in zip(self.x, self.y)), exact=self.exact)

    def residuals(self, b: Real):
        """y_i - b*x_i, exact for exact samples."""
        if self.exact:
            b = _to_exact(b)
            return [yi - b * xi for xi, yi in zip(self.x, self.y)]
        return self.y_array - float(b) * self.x_array


@dataclass(frozen=True)
class RankVector:
    """Permutation of 1..N giving each residual's position."""

    ranks: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.ranks) != list(range(1, len(self.ranks) + 1)):
            raise ValueError(f"Not a permutation of 1..{len(self.ranks)}: {self.ranks}")

    @property
    def n(self) -> int:
        return len(self.ranks)

    def reversed_ranks(self) -> "RankVector":
        """r_i -> N + 1 - r_i (ranks of the negated residuals)."""
        return RankVector(tuple(self.n + 1 - r for r in self.ranks))


@total_ordering
@dataclass(frozen=True, eq=False)
class GiniValue:
    """Exact index value numerator / D with D = denominator_for(N)."""

    numerator: int
    denominator: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        return self.numerator / self.denominator

    def _other(self, other):
        if isinstance(other, GiniValue):
            return other.fraction
        if isinstance(other, (int, float, Fraction)):
            return other
        return NotImplemented

    def __eq__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self.fraction == o

    def __lt__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self.fraction < o

    def __hash__(self):
        return hash(self.fraction)

    def __neg__(self) -> "GiniValue":
        return GiniValue(-self.numerator, self.denominator)

    def __repr__(self) -> str:
        f = self.fraction
        return f"GiniValue({f.numerator}/{f.denominator})"


def gini_score(ranks: np.ndarray) -> int:
    """Integer sum  sum_i |N+1-i-r_i| - |i-r_i|  for 1-based ranks."""
    n = len(ranks)
    i = np.arange(1, n + 1)
    r = np.asarray(ranks, dtype=np.int64)
    return int(np.sum(np.abs(n + 1 - i - r) - np.abs(i - r)))


def gini_from_score(score: int, n: int) -> GiniValue:
    return GiniValue(2 * score, denominator_for(n))


def compute_ranks(values: Sequence[Real], tolerance: Optional[float] = None) -> RankVector:
    """Rank of each entry among all entries (1 = smallest).

    Raises TiedValues when two entries coincide: exactly for rationals, within
    the relative tolerance of their spread (plus a rounding floor) for floats.
    """
    return RankVector(tuple(int(r) for r in _rank_array(values, tolerance)))


def _default_threshold(arr: np.ndarray, tolerance: Optional[float]) -> float:
    tol = get_ranking_rule("tie_relative_tolerance") if tolerance is None else tolerance
    ulps = get_ranking_rule("tie_rounding_ulps") * np.finfo(float).eps
    return tol * float(np.ptp(arr)) + ulps * float(np.max(np.abs(arr)))


def _rank_array(values, tolerance: Optional[float] = None,
                threshold: Optional[float] = None) -> np.ndarray:
    n = len(values)
    if not isinstance(values, np.ndarray) and _is_exact(values):
        order = sorted(range(n), key=values.__getitem__)
        for a, b in zip(order, order[1:]):
            if values[a] == values[b]:
                raise TiedValues(f"Entries {a + 1} and {b + 1} are tied at {values[a]}")
        order = np.asarray(order, dtype=np.int64)
    else:
        arr = np.asarray(values, dtype=float)
        if threshold is None:
            threshold = _default_threshold(arr, tolerance)
        order = np.argsort(arr, kind="stable")
        ordered = arr[order]
        tied = np.nonzero(np.diff(ordered) <= threshold)[0]
        if tied.size:
            k = int(tied[0])
            raise TiedValues(
                f"Entries {int(order[k]) + 1} and {int(order[k + 1]) + 1} are tied at {ordered[k]!r}"
            )
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return ranks


def gini_index(ranks: Union[RankVector, Sequence[int]]) -> GiniValue:
    """Gini's cograduation index between ranks and the natural order 1..N."""
    r = ranks.ranks if isinstance(ranks, RankVector) else tuple(ranks)
    return gini_from_score(gini_score(np.asarray(r)), len(r))


def residual_score(sample: Sample, b: Real, tolerance: Optional[float] = None) -> int:
    """Integer score of G(y;b); BreakpointHit when residuals tie."""
    threshold = None if sample.exact else sample.tie_threshold(b, tolerance)
    try:
        ranks = _rank_array(sample.residuals(b), tolerance, threshold)
    except TiedValues as e:
        raise BreakpointHit(f"b={b} is a breakpoint: {e}") from e
    return gini_score(ranks)


def gini_at(sample: Sample, b: Real, tolerance: Optional[float] = None) -> GiniValue:
    """G(y;b) for b outside the breakpoint set."""
    return gini_from_score(residual_score(sample, b, tolerance), sample.n)

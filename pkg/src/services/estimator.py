"""
Slope Estimator
Maximum G-indifference point estimate and distribution-free confidence bounds.
"""

import sys
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import get_null_rule
from services.errors import DegenerateLevel, DomainError
from services.null_dist import (
    critical_value,
    exact_null,
    monte_carlo_null,
    normal_critical_value,
)
from services.ranks_gini import GiniValue, Real, Sample, denominator_for, residual_score
from services.slope_process import (
    GiniStepFunction,
    build_step_function,
    edge_margin,
    slope_spans,
)

logger = logging.getLogger(__name__)

INF = float("inf")


@dataclass(frozen=True)
class SlopeEstimate:
    """beta_tilde with the zero plateau [b(s), b(s+1)) when G vanishes on one."""

    beta_tilde: Real
    zero_plateau: Optional[Tuple[Real, Real]]
    sup_positive: Real
    inf_negative: Real


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: Real
    upper: Real
    g_star: Union[GiniValue, float]
    achieved_level: Union[Fraction, float]
    target_level: float
    null_source: str = "exact"
    closed: bool = False


def _g_value(g_star) -> Union[Fraction, float]:
    if isinstance(g_star, GiniValue):
        return g_star.fraction
    if isinstance(g_star, float):
        return g_star
    return Fraction(g_star)


def _left_endpoint(breakpoints: Sequence[Real], k: int) -> Real:
    """Left end of interval k; -inf for the first, +inf past the last."""
    if k == 0:
        return -INF
    if k > len(breakpoints):
        return INF
    return breakpoints[k - 1]


def _first_index(values, predicate: Callable) -> int:
    for k, v in enumerate(values):
        if predicate(v):
            return k
    return len(values)


def _estimate_from(breakpoints: Sequence[Real], k_nonpos: int, k_neg: int) -> SlopeEstimate:
    sup_pos = breakpoints[k_nonpos - 1]
    inf_neg = breakpoints[k_neg - 1]
    plateau = (sup_pos, inf_neg) if k_neg != k_nonpos else None
    return SlopeEstimate((sup_pos + inf_neg) / 2, plateau, sup_pos, inf_neg)


def point_estimate(step: GiniStepFunction) -> SlopeEstimate:
    """beta_tilde = (sup{b: G > 0} + inf{b: G < 0}) / 2 from the step values."""
    k_nonpos = _first_index(step.values, lambda v: v <= 0)
    k_neg = _first_index(step.values, lambda v: v < 0)
    return _estimate_from(step.breakpoints, k_nonpos, k_neg)


def _bound_predicates(g: Union[Fraction, float], closed: bool):
    if closed:
        return (lambda v: v <= g), (lambda v: v < -g)
    return (lambda v: v < g), (lambda v: v <= -g)


def _check_g_star(g: Union[Fraction, float]) -> None:
    if g <= 0:
        raise DegenerateLevel(f"G* must be positive, got {g}")
    if g > 1:
        raise DomainError(f"G* cannot exceed 1, got {g}")


def ci_bounds(step: GiniStepFunction, g_star, closed: bool = False) -> Tuple[Real, Real]:
    """(inf{b: G < G*}, sup{b: G > -G*}); closed uses <= G* and >= -G*."""
    g = _g_value(g_star)
    _check_g_star(g)
    lower_pred, upper_pred = _bound_predicates(g, closed)
    lower = _left_endpoint(step.breakpoints, _first_index(step.values, lower_pred))
    upper = _left_endpoint(step.breakpoints, _first_index(step.values, upper_pred))
    return lower, upper


class _MidpointSearch:
    """Binary search over intervals of b -> G using one ranking per probe."""

    def __init__(self, sample: Sample, tolerance: Optional[float] = None, max_n: Optional[int] = None):
        self.sample = sample
        self.tolerance = tolerance
        lows, highs = slope_spans(sample, tolerance=tolerance, max_n=max_n)
        self.breakpoints = list(lows)
        self.highs = highs
        self.r = len(self.breakpoints)
        self.evaluations = 0
        self._cache = {}

    def _representative(self, k: int) -> Real:
        lows, highs = self.breakpoints, self.highs
        if k == 0:
            return lows[0] - edge_margin(self.sample, lows[0], self.tolerance)
        if k == self.r:
            return highs[-1] + edge_margin(self.sample, highs[-1], self.tolerance)
        return (highs[k - 1] + lows[k]) / 2

    def value(self, k: int) -> Fraction:
        if k not in self._cache:
            score = residual_score(self.sample, self._representative(k), self.tolerance)
            self._cache[k] = score
            self.evaluations += 1
        return Fraction(2 * self._cache[k], denominator_for(self.sample.n))

    def first(self, predicate: Callable, lo: int = 0) -> int:
        """Smallest k in [lo, r] whose value satisfies a monotone predicate, r + 1 if none."""
        hi = self.r + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if predicate(self.value(mid)):
                hi = mid
            else:
                lo = mid + 1
        return lo


def fast_point_estimate(sample: Sample, tolerance: Optional[float] = None,
                        max_n: Optional[int] = None) -> SlopeEstimate:
    """beta_tilde without materialising every interval value."""
    search = _MidpointSearch(sample, tolerance, max_n)
    k_nonpos = search.first(lambda v: v <= 0)
    k_neg = search.first(lambda v: v < 0, lo=k_nonpos)
    logger.debug(f"Fast estimate: {search.evaluations} rankings over r={search.r} breakpoints")
    return _estimate_from(search.breakpoints, k_nonpos, k_neg)


def fast_ci_bounds(sample: Sample, g_star, closed: bool = False,
                   tolerance: Optional[float] = None, max_n: Optional[int] = None) -> Tuple[Real, Real]:
    """ci_bounds computed by binary search on the sample."""
    g = _g_value(g_star)
    _check_g_star(g)
    lower_pred, upper_pred = _bound_predicates(g, closed)
    search = _MidpointSearch(sample, tolerance, max_n)
    lower = _left_endpoint(search.breakpoints, search.first(lower_pred))
    upper = _left_endpoint(search.breakpoints, search.first(upper_pred))
    return lower, upper


def confidence_interval(sample: Sample, target_level: float, null_method: str = "exact",
                        step: Optional[GiniStepFunction] = None, use_step_function: bool = True,
                        ceiling: Optional[int] = None, level_decimals="default",
                        reps: Optional[int] = None, seed: int = 0,
                        closed: bool = False) -> ConfidenceInterval:
    """Invert the null law of G into bounds for beta at the smallest admissible G*."""
    if not 0 < target_level < 1:
        raise DomainError(f"Target level must lie in (0, 1), got {target_level}")

    n = sample.n
    if null_method == "exact":
        g_star, achieved = critical_value(exact_null(n, ceiling=ceiling), target_level, level_decimals)
    elif null_method == "monte_carlo":
        dist = monte_carlo_null(n, reps or get_null_rule("default_mc_reps"), seed)
        g_star, achieved = critical_value(dist, target_level, level_decimals)
    elif null_method == "normal":
        g_star, achieved = normal_critical_value(n, target_level)
    else:
        raise ValueError(f"Unknown null method {null_method!r}")

    if step is None and use_step_function:
        step = build_step_function(sample)
    if step is not None:
        lower, upper = ci_bounds(step, g_star, closed=closed)
    else:
        lower, upper = fast_ci_bounds(sample, g_star, closed=closed)

    logger.info(f"CI at target {target_level}: G*={g_star}, achieved={achieved}, bounds=({lower}, {upper})")
    return ConfidenceInterval(
        lower=lower,
        upper=upper,
        g_star=g_star,
        achieved_level=achieved,
        target_level=float(target_level),
        null_source=null_method,
        closed=closed,
    )

"""
Baseline Estimators
Least squares and Theil-Sen slopes for comparison with beta_tilde.
"""

import random
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from services.ranks_gini import Real, Sample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineFit:
    beta_hat: Real
    beta_star: Real
    slopes_used: int


def ols_slope(sample: Sample) -> Real:
    """sum (x - xbar)(y - ybar) / sum (x - xbar)^2"""
    if sample.exact:
        n = sample.n
        x_bar = sum(sample.x, Fraction(0)) / n
        y_bar = sum(sample.y, Fraction(0)) / n
        sxy = sum(((xi - x_bar) * (yi - y_bar) for xi, yi in zip(sample.x, sample.y)), Fraction(0))
        sxx = sum(((xi - x_bar) ** 2 for xi in sample.x), Fraction(0))
        return sxy / sxx
    x, y = sample.x_array, sample.y_array
    dx = x - x.mean()
    return float(np.dot(dx, y - y.mean()) / np.dot(dx, dx))


def ols_slope_pairwise(sample: Sample) -> Real:
    """Mean of the pairwise slopes weighted by (x_j - x_i)^2."""
    if sample.exact:
        num = Fraction(0)
        den = Fraction(0)
        for i in range(sample.n):
            for j in range(i + 1, sample.n):
                dx = sample.x[j] - sample.x[i]
                num += dx * (sample.y[j] - sample.y[i])
                den += dx * dx
        return num / den
    i, j = np.triu_indices(sample.n, 1)
    dx = sample.x_array[j] - sample.x_array[i]
    dy = sample.y_array[j] - sample.y_array[i]
    return float(np.dot(dx, dy) / np.dot(dx, dx))


def _pairwise_slopes(sample: Sample):
    if sample.exact:
        n = sample.n
        return [
            (sample.y[j] - sample.y[i]) / (sample.x[j] - sample.x[i])
            for i in range(n) for j in range(i + 1, n)
        ]
    i, j = np.triu_indices(sample.n, 1)
    return (sample.y_array[j] - sample.y_array[i]) / (sample.x_array[j] - sample.x_array[i])


def select_kth(values: Sequence[Real], k: int) -> Real:
    """k-th smallest (0-based) by randomized quickselect."""
    if not 0 <= k < len(values):
        raise IndexError(f"k={k} out of range for {len(values)} values")
    items: List[Real] = list(values)
    # fixed seed keeps pivot choice reproducible
    pick = random.Random(len(items)).randrange
    while True:
        if len(items) == 1:
            return items[0]
        pivot = items[pick(len(items))]
        lows = [v for v in items if v < pivot]
        highs = [v for v in items if v > pivot]
        n_pivots = len(items) - len(lows) - len(highs)
        if k < len(lows):
            items = lows
        elif k < len(lows) + n_pivots:
            return pivot
        else:
            k -= len(lows) + n_pivots
            items = highs


def median_of(values) -> Real:
    """Median; midpoint of the two central order statistics for an even count."""
    m = len(values)
    if isinstance(values, np.ndarray):
        if m % 2:
            return float(np.partition(values, m // 2)[m // 2])
        part = np.partition(values, [m // 2 - 1, m // 2])
        return float((part[m // 2 - 1] + part[m // 2]) / 2)
    if m % 2:
        return select_kth(values, m // 2)
    return (select_kth(values, m // 2 - 1) + select_kth(values, m // 2)) / 2


def theil_sen(sample: Sample) -> Real:
    """Median of the N(N-1)/2 pairwise slopes."""
    return median_of(_pairwise_slopes(sample))


def fit_baselines(sample: Sample) -> BaselineFit:
    n = sample.n
    fit = BaselineFit(beta_hat=ols_slope(sample), beta_star=theil_sen(sample), slopes_used=n * (n - 1) // 2)
    logger.debug(f"Baselines for N={n}: OLS={fit.beta_hat}, Theil-Sen={fit.beta_star}")
    return fit

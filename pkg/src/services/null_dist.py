"""
Null Distribution of Gini's Cograduation Index
Exact permutation enumeration, Monte Carlo tables, and critical values for G*.
"""

import sys
import math
import logging
import itertools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import stats

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import get_null_rule
from services.errors import DomainError, LevelUnattainable, NullTooLarge
from services.ranks_gini import GiniValue, denominator_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NullDistribution:
    """Law of G under indifference as integer counts over a sorted support."""

    n: int
    support: Tuple[Fraction, ...]
    counts: Tuple[int, ...]
    total: int
    source: str = "exact"
    reps: Optional[int] = None
    seed: Optional[int] = None

    @property
    def mass(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(c, self.total) for c in self.counts)

    def probability(self, value) -> Fraction:
        value = Fraction(value)
        for v, c in zip(self.support, self.counts):
            if v == value:
                return Fraction(c, self.total)
        return Fraction(0)

    def mean(self) -> Fraction:
        return sum((v * c for v, c in zip(self.support, self.counts)), Fraction(0)) / self.total

    def variance(self) -> Fraction:
        mu = self.mean()
        second = sum((v * v * c for v, c in zip(self.support, self.counts)), Fraction(0)) / self.total
        return second - mu * mu

    def coverage(self, g_star, closed: bool = False) -> Fraction:
        """P{-G* < G < G*}, or P{-G* <= G <= G*} when closed."""
        g = g_star.fraction if isinstance(g_star, GiniValue) else Fraction(g_star)
        inside = sum(
            c for v, c in zip(self.support, self.counts)
            if (abs(v) <= g if closed else abs(v) < g)
        )
        return Fraction(inside, self.total)

    def table_rows(self) -> List[Tuple[int, int, int, int]]:
        """(value_num, value_den, count, total) per support point."""
        return [(v.numerator, v.denominator, c, self.total) for v, c in zip(self.support, self.counts)]


def _score_block(perms: np.ndarray, n: int) -> np.ndarray:
    i = np.arange(1, n + 1)
    return (np.abs(n + 1 - i - perms) - np.abs(i - perms)).sum(axis=1)


def _score_partition(n: int, first: int) -> Dict[int, int]:
    """Score counts over permutations whose first rank is `first`."""
    chunk = get_null_rule("enumeration_chunk")
    rest = [r for r in range(1, n + 1) if r != first]
    counts: Counter = Counter()
    tails = itertools.permutations(rest)
    while True:
        block = list(itertools.islice(tails, chunk))
        if not block:
            break
        perms = np.empty((len(block), n), dtype=np.int64)
        perms[:, 0] = first
        perms[:, 1:] = np.asarray(block, dtype=np.int64)
        scores, freq = np.unique(_score_block(perms, n), return_counts=True)
        counts.update(dict(zip(scores.tolist(), freq.tolist())))
    return dict(counts)


@lru_cache(maxsize=32)
def _exact_counts(n: int, workers: int = 1) -> Tuple[Tuple[int, int], ...]:
    firsts = list(range(1, n + 1))
    if workers > 1 and n >= 8:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_score_partition, [n] * n, firsts))
    else:
        parts = [_score_partition(n, f) for f in firsts]
    total: Counter = Counter()
    for part in parts:
        total.update(part)
    return tuple(sorted(total.items()))


def _from_score_counts(n: int, score_counts, total: int, **kwargs) -> NullDistribution:
    d = denominator_for(n)
    support = tuple(Fraction(2 * s, d) for s, _ in score_counts)
    counts = tuple(int(c) for _, c in score_counts)
    return NullDistribution(n=n, support=support, counts=counts, total=total, **kwargs)


def exact_null(n: int, ceiling: Optional[int] = None, workers: int = 1) -> NullDistribution:
    """Enumerate all n! rank permutations."""
    limit = get_null_rule("enumeration_ceiling") if ceiling is None else ceiling
    if n < 2:
        raise DomainError(f"Null distribution needs n >= 2, got {n}")
    if n > limit:
        raise NullTooLarge(f"Exact enumeration of {n}! permutations exceeds the ceiling n <= {limit}")
    score_counts = _exact_counts(n, max(1, workers))
    dist = _from_score_counts(n, score_counts, math.factorial(n), source="exact")
    logger.info(f"Exact null for n={n}: {len(dist.support)} support points over {dist.total} permutations")
    return dist


def monte_carlo_null(n: int, reps: int, seed: int) -> NullDistribution:
    """Empirical null from uniformly random permutations (deterministic per seed)."""
    if n < 2:
        raise DomainError(f"Null distribution needs n >= 2, got {n}")
    min_reps = get_null_rule("min_mc_reps")
    if reps < min_reps:
        raise DomainError(f"Monte Carlo null needs reps >= {min_reps}, got {reps}")

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    base = np.arange(1, n + 1, dtype=np.int64)
    counts: Counter = Counter()
    chunk = get_null_rule("enumeration_chunk")
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        perms = rng.permuted(np.tile(base, (size, 1)), axis=1)
        scores, freq = np.unique(_score_block(perms, n), return_counts=True)
        counts.update(dict(zip(scores.tolist(), freq.tolist())))
        done += size
    dist = _from_score_counts(n, sorted(counts.items()), reps,
                              source="monte_carlo", reps=reps, seed=int(seed))
    logger.info(f"Monte Carlo null for n={n}: {reps} draws, seed={seed}")
    return dist


def level_is_met(achieved, target_level: float, level_decimals: Optional[int] = None) -> bool:
    """Compare an achieved level with the target at table precision."""
    target = Fraction(repr(float(target_level)))
    if level_decimals is None:
        return Fraction(achieved) >= target
    return Fraction(achieved) >= target - Fraction(1, 2 * 10 ** level_decimals)


def critical_value(dist: NullDistribution, target_level: float,
                   level_decimals: Union[int, None, str] = "default") -> Tuple[GiniValue, Fraction]:
    """Smallest G* in support U {1} with P{-G* < G < G*} reaching the target."""
    if not 0 < target_level < 1:
        raise DomainError(f"Target level must lie in (0, 1), got {target_level}")
    decimals = get_null_rule("level_decimals") if level_decimals == "default" else level_decimals

    d = denominator_for(dist.n)
    candidates = sorted({v for v in dist.support if v > 0} | {Fraction(1)})
    for g in candidates:
        achieved = dist.coverage(g)
        if level_is_met(achieved, target_level, decimals):
            if achieved < Fraction(repr(float(target_level))):
                logger.warning(
                    f"n={dist.n}: achieved level {achieved} (~{float(achieved):.4f}) is below the "
                    f"target {target_level}; accepted at {decimals}-decimal table precision"
                )
            return GiniValue(int(g * d), d), achieved

    max_level = dist.coverage(1)
    raise LevelUnattainable(
        f"Level {target_level} is unattainable for n={dist.n}: "
        f"maximum attainable level is {max_level} (~{float(max_level):.4f})",
        max_level=float(max_level),
    )


def normal_critical_value(n: int, target_level: float) -> Tuple[float, float]:
    """G* from the asymptotic law G ~ N(0, 2/(3n)) under indifference."""
    if not 0 < target_level < 1:
        raise DomainError(f"Target level must lie in (0, 1), got {target_level}")
    z = stats.norm.ppf((1 + target_level) / 2)
    return min(1.0, float(z * math.sqrt(2.0 / (3.0 * n)))), float(target_level)

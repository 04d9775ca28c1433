#!/usr/bin/env python3
"""
Estimator tests
Point estimate, confidence bounds and their invariance properties.
"""

import os
import sys
import itertools
from fractions import Fraction

import numpy as np
import pytest

# Add the src directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.errors import DegenerateLevel, LevelUnattainable
from services.estimator import (
    ci_bounds,
    confidence_interval,
    fast_ci_bounds,
    fast_point_estimate,
    point_estimate,
)
from services.ranks_gini import Sample, gini_index
from services.slope_process import build_step_function, evaluate


def worked_sample():
    return Sample.from_strings(["1", "2", "3", "4"], ["2", "2.5", "4", "5"])


def test_worked_point_estimate():
    estimate = point_estimate(build_step_function(worked_sample()))
    assert estimate.beta_tilde == 1
    assert isinstance(estimate.beta_tilde, Fraction)
    assert estimate.zero_plateau is None


def test_two_point_estimate():
    estimate = point_estimate(build_step_function(Sample.from_strings(["1", "2"], ["2", "5"])))
    assert estimate.beta_tilde == 3


def test_antisymmetric_data_estimate():
    sample = Sample.from_strings(["1", "2", "3", "4"], ["0", "1", "1", "0"])
    estimate = point_estimate(build_step_function(sample))
    assert estimate.beta_tilde == 0
    assert fast_point_estimate(sample).beta_tilde == 0


def test_zero_plateau_midpoint():
    rng = np.random.default_rng(21)
    found = 0
    for _ in range(200):
        n = int(rng.integers(4, 11))
        sample = _random_exact_sample(rng, n)
        step = build_step_function(sample)
        estimate = point_estimate(step)
        assert fast_point_estimate(sample) == estimate
        if estimate.zero_plateau is None:
            assert estimate.beta_tilde in step.breakpoints
            continue
        found += 1
        lo, hi = estimate.zero_plateau
        assert estimate.beta_tilde == (lo + hi) / 2
        assert evaluate(step, lo) == 0
    assert found > 0


def test_worked_ci_bounds():
    step = build_step_function(worked_sample())
    assert ci_bounds(step, 1) == (Fraction(1, 2), Fraction(3, 2))
    assert ci_bounds(step, Fraction(3, 4), closed=True) == (Fraction(1, 2), Fraction(3, 2))
    assert ci_bounds(step, Fraction(3, 4)) == (1, Fraction(3, 2))


def test_ci_bounds_rejects_nonpositive_level():
    step = build_step_function(worked_sample())
    with pytest.raises(DegenerateLevel):
        ci_bounds(step, 0)
    with pytest.raises(DegenerateLevel):
        fast_ci_bounds(worked_sample(), Fraction(-1, 2))


def test_worked_confidence_interval():
    ci = confidence_interval(worked_sample(), 0.92)
    assert ci.g_star == 1
    assert ci.achieved_level == Fraction(11, 12)
    assert (ci.lower, ci.upper) == (Fraction(1, 2), Fraction(3, 2))
    assert ci.null_source == "exact"


def test_confidence_interval_without_step_function():
    ci = confidence_interval(worked_sample(), 0.92, use_step_function=False)
    assert (ci.lower, ci.upper) == (Fraction(1, 2), Fraction(3, 2))


def test_half_level_against_enumeration():
    counts = {}
    for perm in itertools.permutations(range(1, 5)):
        g = gini_index(perm).fraction
        counts[g] = counts.get(g, 0) + 1
    candidates = sorted({abs(g) for g in counts if g != 0} | {Fraction(1)})
    expected = next(
        g for g in candidates
        if Fraction(sum(c for v, c in counts.items() if abs(v) < g), 24) >= Fraction(1, 2)
    )
    ci = confidence_interval(worked_sample(), 0.5, level_decimals=None)
    assert ci.g_star == expected
    assert ci.achieved_level >= Fraction(1, 2)
    assert (ci.lower, ci.upper) == ci_bounds(build_step_function(worked_sample()), expected)


def test_two_point_level_unattainable():
    with pytest.raises(LevelUnattainable) as info:
        confidence_interval(Sample.from_strings(["1", "2"], ["2", "5"]), 0.9)
    assert info.value.max_level == 0.0


def test_normal_null_interval_contains_estimate():
    rng = np.random.default_rng(3)
    x = np.arange(1, 41, dtype=float)
    sample = Sample.from_floats(x, 2.0 * x + rng.normal(size=40))
    ci = confidence_interval(sample, 0.95, null_method="normal")
    beta = point_estimate(build_step_function(sample)).beta_tilde
    assert ci.lower <= beta <= ci.upper
    assert ci.null_source == "normal"


def _random_exact_sample(rng, n):
    x = sorted(rng.choice(np.arange(-500, 500), size=n, replace=False))
    y = rng.integers(-1000, 1000, size=n)
    return Sample(tuple(Fraction(int(v), 10) for v in x), tuple(Fraction(int(v), 100) for v in y), exact=True)


def test_equivariance_antisymmetry_and_sandwich():
    rng = np.random.default_rng(99)
    for case in range(200):
        n = int(rng.integers(2, 31))
        sample = _random_exact_sample(rng, n)
        step = build_step_function(sample)
        beta = point_estimate(step).beta_tilde

        c = Fraction(int(rng.integers(-50, 50)), 7)
        d = Fraction(int(rng.integers(-50, 50)), 3)
        shifted = build_step_function(sample.shifted(c, d))
        assert point_estimate(shifted).beta_tilde == beta + d, f"case {case}"

        negated = build_step_function(sample.negated())
        assert point_estimate(negated).beta_tilde == -beta, f"case {case}"

        levels = sorted({abs(v.fraction) for v in step.values if v != 0} | {Fraction(1)})
        previous = None
        for g in levels:
            lower, upper = ci_bounds(step, g)
            assert lower <= beta <= upper
            if previous is not None:
                assert lower <= previous[0] and previous[1] <= upper
            previous = (lower, upper)


def test_fast_path_matches_step_function():
    rng = np.random.default_rng(8)
    for case in range(200):
        n = int(rng.integers(2, 31))
        x = np.sort(rng.choice(np.arange(0, 1000), size=n, replace=False)).astype(float)
        sample = Sample.from_floats(x, rng.standard_cauchy(size=n) + 0.5 * x)
        step = build_step_function(sample)
        assert fast_point_estimate(sample) == point_estimate(step), f"case {case}"
        for g in (Fraction(1, 2), Fraction(3, 4), Fraction(1)):
            assert fast_ci_bounds(sample, g) == ci_bounds(step, g)
            assert fast_ci_bounds(sample, g, closed=True) == ci_bounds(step, g, closed=True)


@pytest.mark.parametrize("offset, tol", [(1e3, 1e-9), (1e6, 1e-6), (1e9, 1e-6), (1e12, 1e-3)])
def test_float_estimate_is_location_equivariant(offset, tol):
    x = [1.0, 2.0, 3.0, 4.0, 5.0]
    y = [0.3, 0.1, 0.5, 0.2, 0.4]
    base = Sample.from_floats(x, y)
    shifted = Sample.from_floats(x, [v + offset for v in y])

    assert point_estimate(build_step_function(base)).beta_tilde == pytest.approx(0.025, abs=1e-12)
    step = build_step_function(shifted)
    estimate = point_estimate(step)
    assert estimate.beta_tilde == pytest.approx(0.025, abs=tol)
    assert point_estimate(build_step_function(shifted, method="direct")) == estimate
    assert fast_point_estimate(shifted) == estimate
    assert fast_ci_bounds(shifted, Fraction(1, 2)) == ci_bounds(step, Fraction(1, 2))


def test_fast_path_matches_step_function_with_offsets():
    rng = np.random.default_rng(41)
    for case in range(100):
        n = int(rng.integers(3, 25))
        x = np.arange(1, n + 1, dtype=float)
        offset = float(10.0 ** rng.integers(4, 13))
        sample = Sample.from_floats(x, offset + x + rng.normal(size=n))
        step = build_step_function(sample)
        assert fast_point_estimate(sample) == point_estimate(step), f"case {case}"
        assert fast_ci_bounds(sample, Fraction(3, 4)) == ci_bounds(step, Fraction(3, 4))

#!/usr/bin/env python3
"""
Monte Carlo harness tests
Config parsing, seeded determinism, variance targets and CI coverage.
"""

import os
import sys
import math
from dataclasses import replace

import pytest
from scipy import stats

# Add the src directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.asymptotics import DistributionModel
from services.errors import InvalidConfig, ModelNotSampleable, NullTooLarge
from services.montecarlo import (
    SimulationConfig,
    binomial_band,
    coverage_experiment,
    parse_config_file,
    parse_config_text,
    replication_rng,
    run_simulation,
)


def test_parse_config_text():
    config = parse_config_text(
        "# coverage study\n"
        "model = Laplace\n"
        "n = 8\n"
        "reps = 500\n"
        "beta = 2\n"
        "alpha = -1.5\n"
        "seed = 11\n"
        "level = 0.9   # target\n"
    )
    assert config.model == "laplace"
    assert config.design == "linear"
    assert config.n == 8
    assert config.reps == 500
    assert config.beta_true == 2.0
    assert config.alpha_true == -1.5
    assert config.seed == 11
    assert config.target_level == 0.9
    assert config.compute_ci


def test_parse_config_file(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text("n = 10\nreps = 100\n")
    config = parse_config_file(path)
    assert (config.n, config.reps, config.model) == (10, 100, "normal")
    with pytest.raises(InvalidConfig):
        parse_config_file(tmp_path / "missing.cfg")


@pytest.mark.parametrize("text", [
    "n = 8\nreps = 500\ncolor = red\n",
    "n = 8\nn = 9\nreps = 500\n",
    "n 8\nreps = 500\n",
    "n = 1\nreps = 500\n",
    "n = 8\nreps = 10\n",
    "n = 8\nreps = 500\nmodel = gumbel\n",
    "n = 8\nreps = 500\ncompute_ci = maybe\n",
    "n = 8\nreps = 500\ncompute_ci = true\n",
    "n = 8\nreps = 500\nlevel = 1.5\n",
])
def test_parse_config_errors(text):
    with pytest.raises(InvalidConfig):
        parse_config_text(text)


def test_replication_streams_are_independent_of_order():
    first = replication_rng(5, 3).random(4)
    again = replication_rng(5, 3).random(4)
    other = replication_rng(5, 4).random(4)
    assert first.tolist() == again.tolist()
    assert first.tolist() != other.tolist()


def test_simulation_is_deterministic():
    config = SimulationConfig(model="laplace", n=12, reps=600, seed=123, compute_ci=True, target_level=0.9)
    first = run_simulation(config).deterministic_dict()
    second = run_simulation(config).deterministic_dict()
    assert first == second


def test_simulation_independent_of_worker_count():
    config = SimulationConfig(model="normal", n=10, reps=600, seed=9, compute_ci=True, target_level=0.8)
    sequential = run_simulation(config).deterministic_dict()
    parallel = run_simulation(config.model_copy(update={"workers": 2})).deterministic_dict()
    sequential.pop("config")
    parallel.pop("config")
    assert sequential == parallel


def test_seed_changes_results():
    config = SimulationConfig(n=10, reps=200, seed=1)
    other = config.model_copy(update={"seed": 2})
    assert run_simulation(config).beta_tilde != run_simulation(other).beta_tilde


def test_variance_matches_asymptotic_formula():
    config = SimulationConfig(model="normal", n=99, reps=2000, seed=7)
    report = run_simulation(config)
    assert report.t_squared == pytest.approx(80850.0)
    assert 0.85 <= report.variance_ratio_tilde <= 1.18


def test_null_variance_scaled():
    config = SimulationConfig(n=200, reps=20000, seed=3, null_only=True)
    report = run_simulation(config)
    assert report.beta_tilde is None
    assert 0.617 <= report.null_variance_scaled <= 0.717


def test_estimator_is_centered():
    config = SimulationConfig(model="cauchy", n=30, reps=1000, beta_true=5.0, alpha_true=2.0, seed=17)
    report = run_simulation(config)
    se = math.sqrt(report.beta_tilde.variance / config.reps)
    assert abs(report.beta_tilde.mean - 5.0) <= 3 * se
    assert report.empirical_are_vs_ols > 1.0


@pytest.mark.parametrize("model", ["normal", "laplace", "cauchy"])
def test_coverage_is_distribution_free(model):
    config = SimulationConfig(model=model, n=8, reps=5000, seed=2024, compute_ci=True, target_level=0.90)
    report = run_simulation(config)
    assert report.ci_null_source == "exact"
    level = report.ci_achieved_level
    assert level >= 0.895
    assert abs(report.ci_coverage - level) <= binomial_band(level, config.reps)


def test_four_point_coverage_uses_exact_level():
    config = SimulationConfig(n=4, reps=2000, seed=5, compute_ci=True, target_level=0.92)
    report = run_simulation(config)
    assert report.ci_achieved_level == pytest.approx(11 / 12, abs=1e-15)
    assert report.ci_g_star == 1.0
    assert abs(report.ci_coverage - 11 / 12) <= binomial_band(11 / 12, config.reps)


def test_step_function_path_matches_fast_path():
    config = SimulationConfig(model="laplace", n=10, reps=200, seed=8, compute_ci=True, target_level=0.9)
    fast = run_simulation(config).deterministic_dict()
    step = run_simulation(config.model_copy(update={"use_step_function": True})).deterministic_dict()
    fast.pop("config")
    step.pop("config")
    assert fast == step


def test_coverage_experiment_forces_interval():
    config = SimulationConfig(n=6, reps=300, seed=4, target_level=0.8)
    coverage = coverage_experiment(config)
    assert 0.0 <= coverage <= 1.0
    with pytest.raises(InvalidConfig):
        coverage_experiment(SimulationConfig(n=6, reps=300))


def test_binomial_band():
    assert binomial_band(0.9, 5000) == pytest.approx(2 * math.sqrt(0.09 / 5000))
    assert binomial_band(0.9, 5000, sigmas=3.0) == pytest.approx(3 * math.sqrt(0.09 / 5000))


def test_large_intercept_does_not_break_replications():
    config = SimulationConfig(n=20, reps=100, seed=1, compute_ci=True, target_level=0.8)
    base = run_simulation(config)
    shifted = run_simulation(config.model_copy(update={"alpha_true": 1e12}))
    assert shifted.null_variance_scaled == base.null_variance_scaled
    assert shifted.beta_tilde.mean == pytest.approx(base.beta_tilde.mean, abs=0.02)
    assert 0.0 <= shifted.ci_coverage <= 1.0


def test_null_ceiling_override():
    config = SimulationConfig(n=6, reps=100, seed=2, compute_ci=True, target_level=0.8)
    assert run_simulation(config).ci_null_source == "exact"
    with pytest.raises(NullTooLarge):
        run_simulation(config, null_ceiling=5)
    with pytest.raises(NullTooLarge):
        coverage_experiment(config, null_ceiling=5)


def _logistic_law():
    d = stats.logistic
    return DistributionModel.from_functions(
        "logistic",
        d.pdf,
        lambda y: d.pdf(y) * (1.0 - 2.0 * d.cdf(y)),
        d.cdf,
        d.ppf,
        variance=math.pi ** 2 / 3,
        is_symmetric=True,
    )


def test_supplied_error_law():
    config = SimulationConfig(n=8, reps=500, seed=6, compute_ci=True, target_level=0.9, workers=2)
    report = run_simulation(config, law=_logistic_law())
    assert report.error_law == "logistic"
    assert report.C == pytest.approx(-math.sqrt(12) / 30, abs=1e-6)
    # the ranks of the errors do not depend on the law
    normal = run_simulation(config.model_copy(update={"workers": 1}))
    assert report.ci_coverage == normal.ci_coverage
    assert normal.error_law == "normal"


def test_error_law_without_quantile():
    config = SimulationConfig(n=8, reps=200, seed=6)
    with pytest.raises(ModelNotSampleable):
        run_simulation(config, law=replace(_logistic_law(), quantile=None))

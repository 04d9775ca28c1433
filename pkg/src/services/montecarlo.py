"""
Monte Carlo Harness
Seeded simulations comparing beta_tilde with least squares and Theil-Sen,
the null variance of G, and confidence interval coverage.
"""

import sys
import math
import time
import logging
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import (
    NULL_METHODS,
    get_null_rule,
    get_output_rule,
    get_simulation_rule,
    is_supported_design,
    is_supported_model,
)
from services.asymptotics import DistributionModel, compute_C, get_design, get_model
from services.baselines import ols_slope, theil_sen
from services.errors import CogradError, InvalidConfig
from services.estimator import ci_bounds, fast_ci_bounds, fast_point_estimate, point_estimate
from services.null_dist import critical_value, exact_null, monte_carlo_null, normal_critical_value
from services.ranks_gini import Sample, compute_ranks, gini_index
from services.slope_process import build_step_function

logger = logging.getLogger(__name__)

# Columns of the per-replication result matrix
COL_TILDE, COL_HAT, COL_STAR, COL_NULL_G, COL_COVERED = range(5)

CONFIG_KEYS = {
    "model": "model",
    "design": "design",
    "n": "n",
    "reps": "reps",
    "beta": "beta_true",
    "alpha": "alpha_true",
    "seed": "seed",
    "level": "target_level",
    "compute_ci": "compute_ci",
    "workers": "workers",
    "null_only": "null_only",
    "use_step_function": "use_step_function",
    "null_method": "null_method",
}


class SimulationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: str = "normal"
    design: str = "linear"
    n: int
    reps: int
    beta_true: float = 1.0
    alpha_true: float = 0.0
    seed: int = 0
    compute_ci: bool = False
    target_level: Optional[float] = None
    workers: int = 1
    null_only: bool = False
    use_step_function: bool = False
    null_method: str = "exact"

    @field_validator("model")
    def validate_model(cls, v):
        v = v.strip().lower()
        if not is_supported_model(v):
            raise ValueError(f"Unsupported model: {v}")
        return v

    @field_validator("design")
    def validate_design(cls, v):
        v = v.strip().lower()
        if not is_supported_design(v):
            raise ValueError(f"Unsupported design: {v}")
        return v

    @field_validator("n")
    def validate_n(cls, v):
        if v < 2:
            raise ValueError("n must be at least 2")
        return v

    @field_validator("reps")
    def validate_reps(cls, v):
        min_reps = get_simulation_rule("min_reps")
        if v < min_reps:
            raise ValueError(f"reps must be at least {min_reps}")
        return v

    @field_validator("seed")
    def validate_seed(cls, v):
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator("target_level")
    def validate_level(cls, v):
        if v is not None and not 0 < v < 1:
            raise ValueError("level must lie in (0, 1)")
        return v

    @field_validator("workers")
    def validate_workers(cls, v):
        if v < 1:
            raise ValueError("workers must be positive")
        return v

    @field_validator("null_method")
    def validate_null_method(cls, v):
        if v not in NULL_METHODS:
            raise ValueError(f"null_method must be one of {NULL_METHODS}")
        return v

    @model_validator(mode="after")
    def validate_ci_request(self):
        if self.compute_ci and self.target_level is None:
            raise ValueError("compute_ci requires level")
        return self


class EstimatorSummary(BaseModel):
    mean: float
    variance: float
    bias: float


class SimulationReport(BaseModel):
    schema_version: int
    config: SimulationConfig
    seed: int
    t_squared: float
    C: Optional[float] = None
    beta_tilde: Optional[EstimatorSummary] = None
    beta_hat: Optional[EstimatorSummary] = None
    beta_star: Optional[EstimatorSummary] = None
    variance_ratio_tilde: Optional[float] = None
    empirical_are_vs_ols: Optional[float] = None
    empirical_are_vs_theil: Optional[float] = None
    null_variance_scaled: float
    ci_coverage: Optional[float] = None
    ci_achieved_level: Optional[float] = None
    ci_g_star: Optional[float] = None
    ci_null_source: Optional[str] = None
    error_law: str
    runtime_seconds: float = 0.0

    def deterministic_dict(self) -> Dict:
        """Report without the wall-clock field."""
        return self.model_dump(exclude={"runtime_seconds"})


def _parse_value(key: str, raw: str):
    if key in ("compute_ci", "null_only", "use_step_function"):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise InvalidConfig(f"{key} must be a boolean, got {raw!r}")
    return raw


def parse_config_text(text: str) -> SimulationConfig:
    """Flat `key = value` lines; `#` starts a comment."""
    values: Dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"Line {line_no}: expected `key = value`, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise InvalidConfig(f"Line {line_no}: unknown key {key!r}")
        field_name = CONFIG_KEYS[key]
        if field_name in values:
            raise InvalidConfig(f"Line {line_no}: duplicate key {key!r}")
        values[field_name] = _parse_value(field_name, raw)

    if "target_level" in values and "compute_ci" not in values:
        values["compute_ci"] = True
    try:
        return SimulationConfig(**values)
    except ValidationError as e:
        raise InvalidConfig(f"Invalid simulation config: {e}") from e


def parse_config_file(path) -> SimulationConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidConfig(f"Cannot read config file {path}: {e}") from e
    return parse_config_text(text)


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for replication `index`."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _run_chunk(config: SimulationConfig, start: int, stop: int, g_star: Optional[Fraction],
               law: Optional[DistributionModel] = None) -> np.ndarray:
    model = law or get_model(config.model)
    x = get_design(config.design).points(config.n)
    out = np.full((stop - start, 5), np.nan)

    for row, index in enumerate(range(start, stop)):
        rng = replication_rng(config.seed, index)
        errors = model.sample(rng, config.n)
        sample = Sample.from_floats(x, config.alpha_true + config.beta_true * x + errors)
        # residuals at the true slope are alpha + e, ranked as the errors
        out[row, COL_NULL_G] = float(gini_index(compute_ranks(errors)))
        if config.null_only:
            continue

        if config.use_step_function:
            step = build_step_function(sample)
            out[row, COL_TILDE] = float(point_estimate(step).beta_tilde)
        else:
            step = None
            out[row, COL_TILDE] = float(fast_point_estimate(sample).beta_tilde)
        out[row, COL_HAT] = ols_slope(sample)
        out[row, COL_STAR] = theil_sen(sample)

        if g_star is not None:
            if step is not None:
                lower, upper = ci_bounds(step, g_star)
            else:
                lower, upper = fast_ci_bounds(sample, g_star)
            out[row, COL_COVERED] = 1.0 if lower < config.beta_true < upper else 0.0
    return out


def _chunks(reps: int, size: int) -> List[Tuple[int, int]]:
    return [(s, min(s + size, reps)) for s in range(0, reps, size)]


def _critical_value(config: SimulationConfig, ceiling: Optional[int] = None) -> Tuple[Fraction, float, str]:
    level = config.target_level
    if config.null_method == "exact":
        g, achieved = critical_value(exact_null(config.n, ceiling=ceiling), level)
        return g.fraction, float(achieved), "exact"
    if config.null_method == "monte_carlo":
        dist = monte_carlo_null(config.n, get_null_rule("default_mc_reps"), config.seed)
        g, achieved = critical_value(dist, level)
        return g.fraction, float(achieved), "monte_carlo"
    g, achieved = normal_critical_value(config.n, level)
    return Fraction(g), achieved, "normal"


def _summary(values: np.ndarray, truth: float) -> EstimatorSummary:
    mean = float(np.mean(values))
    return EstimatorSummary(mean=mean, variance=float(np.var(values, ddof=1)), bias=mean - truth)


def run_simulation(config: SimulationConfig, null_ceiling: Optional[int] = None,
                   law: Optional[DistributionModel] = None) -> SimulationReport:
    """Replicate y = alpha + beta x + e and aggregate estimator behaviour.

    ``law`` replaces the built-in error model named in the config, e.g. a model
    from ``DistributionModel.from_functions``; it must carry a quantile function.
    ``null_ceiling`` overrides the exact enumeration ceiling for the interval.
    """
    started = time.perf_counter()
    model = law or get_model(config.model)
    model.require_quantile()
    logger.info(f"Simulation: model={model.name}, design={config.design}, n={config.n}, "
                f"reps={config.reps}, seed={config.seed}, workers={config.workers}")

    design = get_design(config.design)
    t2 = design.t_squared(config.n)
    g_star, achieved, source = (None, None, None)
    if config.compute_ci and not config.null_only:
        g_star, achieved, source = _critical_value(config, null_ceiling)

    chunks = _chunks(config.reps, get_simulation_rule("chunk_size"))
    parallel = config.workers > 1 and len(chunks) > 1
    if parallel and law is not None:
        # user callables need not survive pickling
        logger.warning("Supplied error law runs in-process; ignoring workers")
        parallel = False
    if parallel:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(
                _run_chunk,
                [config] * len(chunks),
                [s for s, _ in chunks],
                [e for _, e in chunks],
                [g_star] * len(chunks),
            ))
    else:
        parts = [_run_chunk(config, s, e, g_star, law) for s, e in chunks]
    results = np.vstack(parts)

    try:
        c = compute_C(model, design.psi())
    except CogradError as e:
        logger.warning(f"C unavailable for {model.name}/{config.design}: {e}")
        c = None

    report = dict(
        schema_version=get_output_rule("schema_version"),
        config=config,
        seed=config.seed,
        error_law=model.name,
        t_squared=t2,
        C=c,
        null_variance_scaled=config.n * float(np.var(results[:, COL_NULL_G], ddof=1)),
    )

    if not config.null_only:
        tilde = _summary(results[:, COL_TILDE], config.beta_true)
        hat = _summary(results[:, COL_HAT], config.beta_true)
        star = _summary(results[:, COL_STAR], config.beta_true)
        report.update(beta_tilde=tilde, beta_hat=hat, beta_star=star)
        if c is not None and abs(c) > 0:
            report["variance_ratio_tilde"] = tilde.variance * 24.0 * t2 * c * c
        if tilde.variance > 0:
            report["empirical_are_vs_ols"] = hat.variance / tilde.variance
            report["empirical_are_vs_theil"] = star.variance / tilde.variance
        if g_star is not None:
            report.update(
                ci_coverage=float(np.mean(results[:, COL_COVERED])),
                ci_achieved_level=achieved,
                ci_g_star=float(g_star),
                ci_null_source=source,
            )

    report["runtime_seconds"] = time.perf_counter() - started
    logger.info(f"Simulation finished in {report['runtime_seconds']:.2f}s")
    return SimulationReport(**report)


def coverage_experiment(config: SimulationConfig, null_ceiling: Optional[int] = None,
                        law: Optional[DistributionModel] = None) -> float:
    """Fraction of replications whose interval contains beta_true."""
    if config.target_level is None:
        raise InvalidConfig("Coverage experiment needs a target level")
    if config.null_only or not config.compute_ci:
        config = config.model_copy(update={"compute_ci": True, "null_only": False})
    return run_simulation(config, null_ceiling, law).ci_coverage


def binomial_band(level: float, reps: int, sigmas: float = 2.0) -> float:
    """sigmas * sqrt(L(1-L)/reps)"""
    return sigmas * math.sqrt(level * (1.0 - level) / reps)

"""
Cograd Service
Fitting, G-trace export, null tables, efficiency reports and simulations
behind one service object shared by the CLI and the HTTP API.
"""

import sys
import math
import logging
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd
from pydantic import BaseModel

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import get_output_rule
from runtime_config import RuntimeConfig, load_runtime_config
from services.asymptotics import efficiency_report, get_design, get_model
from services.baselines import fit_baselines
from services.errors import InvalidSample
from services.estimator import ConfidenceInterval, confidence_interval, point_estimate
from services.montecarlo import SimulationConfig, SimulationReport, run_simulation
from services.null_dist import exact_null
from services.ranks_gini import Real, Sample
from services.slope_process import build_step_function

logger = logging.getLogger(__name__)

GTRACE_COLUMNS = ["interval_left", "interval_right", "value_num", "value_den"]
NULLTABLE_COLUMNS = ["value_num", "value_den", "count", "n_factorial"]


class RationalOut(BaseModel):
    num: int
    den: int

    @classmethod
    def of(cls, value) -> "RationalOut":
        f = Fraction(value)
        return cls(num=f.numerator, den=f.denominator)


class CIOutput(BaseModel):
    lower: float
    upper: float
    g_star: Optional[RationalOut] = None
    g_star_decimal: float
    achieved_level: Optional[RationalOut] = None
    achieved_level_decimal: float
    target_level: float
    null_source: str


class FitOutput(BaseModel):
    schema_version: int
    n: int
    breakpoint_count: int
    exact: bool
    beta_tilde: float
    beta_tilde_exact: Optional[RationalOut] = None
    zero_plateau: Optional[List[float]] = None
    beta_hat: float
    beta_star: float
    ci: Optional[CIOutput] = None


class AreOutput(BaseModel):
    schema_version: int
    model: str
    design: str
    C: float
    B: float
    sigma2: Union[float, str]
    are_vs_ols: Union[float, str]
    are_vs_theil: float
    var_tilde_unitT2: float
    var_hat: Union[float, str]
    var_star: float


def format_real(value: Real) -> str:
    """Decimal text for terminating rationals, num/den otherwise; +-inf as tokens."""
    if isinstance(value, float):
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return repr(value)
    f = Fraction(value)
    den, digits2, digits5 = f.denominator, 0, 0
    while den % 2 == 0:
        den //= 2
        digits2 += 1
    while den % 5 == 0:
        den //= 5
        digits5 += 1
    if den != 1:
        return f"{f.numerator}/{f.denominator}"
    digits = max(digits2, digits5)
    if digits == 0:
        return str(f.numerator)
    text = str(abs(int(f * 10 ** digits))).rjust(digits + 1, "0")
    sign = "-" if f < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def _json_number(value: float) -> Union[float, str]:
    if math.isinf(value):
        token = get_output_rule("infinity_token")
        return token if value > 0 else f"-{token}"
    return value


def read_sample_csv(source, exact: bool = True) -> Sample:
    """Read a CSV with header x,y; rows may be unsorted."""
    try:
        df = pd.read_csv(source, dtype=str, skipinitialspace=True)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InvalidSample(f"Malformed CSV: {e}") from e
    df.columns = [str(c).strip().lower() for c in df.columns]
    if list(df.columns) != ["x", "y"]:
        raise InvalidSample(f"CSV header must be x,y, got {','.join(df.columns)}")
    if df.isna().any().any():
        raise InvalidSample("CSV has empty cells")
    rows = list(zip(df["x"], df["y"]))
    return Sample.from_rows(rows, exact=exact)


class CogradService:
    """Entry point for the slope estimator and its companions."""

    def __init__(self, runtime_config: Optional[RuntimeConfig] = None):
        self.config = runtime_config or load_runtime_config()
        logger.info(f"Cograd service initialized: {self.config.as_dict()}")

    def choose_null_method(self, n: int, requested: str = "auto") -> str:
        if requested != "auto":
            return requested
        return "exact" if n <= self.config.null_ceiling else "normal"

    def fit(self, sample: Sample, level: Optional[float] = None, null_method: str = "auto",
            seed: int = 0, reps: Optional[int] = None) -> FitOutput:
        """beta_tilde, the two baselines and, when a level is given, the confidence interval."""
        step = build_step_function(sample, max_n=self.config.step_max_n)
        estimate = point_estimate(step)
        baselines = fit_baselines(sample)

        ci_out = None
        if level is not None:
            method = self.choose_null_method(sample.n, null_method)
            ci = confidence_interval(
                sample, level, null_method=method, step=step,
                ceiling=self.config.null_ceiling, seed=seed, reps=reps,
            )
            ci_out = self._ci_output(ci)

        plateau = None
        if estimate.zero_plateau is not None:
            plateau = [float(estimate.zero_plateau[0]), float(estimate.zero_plateau[1])]

        output = FitOutput(
            schema_version=get_output_rule("schema_version"),
            n=sample.n,
            breakpoint_count=step.r,
            exact=sample.exact,
            beta_tilde=float(estimate.beta_tilde),
            beta_tilde_exact=RationalOut.of(estimate.beta_tilde) if sample.exact else None,
            zero_plateau=plateau,
            beta_hat=float(baselines.beta_hat),
            beta_star=float(baselines.beta_star),
            ci=ci_out,
        )
        logger.info(f"Fit N={sample.n}: beta_tilde={output.beta_tilde}, beta_hat={output.beta_hat}, "
                    f"beta_star={output.beta_star}")
        return output

    @staticmethod
    def _ci_output(ci: ConfidenceInterval) -> CIOutput:
        # rational fields only where the null law is a finite count
        rational = ci.null_source != "normal"
        g = ci.g_star.fraction if hasattr(ci.g_star, "fraction") else ci.g_star
        achieved = ci.achieved_level
        return CIOutput(
            lower=float(ci.lower),
            upper=float(ci.upper),
            g_star=RationalOut.of(g) if rational else None,
            g_star_decimal=float(g),
            achieved_level=RationalOut.of(achieved) if rational else None,
            achieved_level_decimal=float(achieved),
            target_level=ci.target_level,
            null_source=ci.null_source,
        )

    def gtrace(self, sample: Sample) -> pd.DataFrame:
        """One row per interval of b -> G(y;b)."""
        step = build_step_function(sample, max_n=self.config.step_max_n)
        rows = [
            (format_real(left), format_real(right), num, den)
            for left, right, num, den in step.trace_records()
        ]
        return pd.DataFrame(rows, columns=GTRACE_COLUMNS)

    def null_table(self, n: int) -> pd.DataFrame:
        dist = exact_null(n, ceiling=self.config.null_ceiling, workers=self.config.workers)
        return pd.DataFrame(dist.table_rows(), columns=NULLTABLE_COLUMNS)

    def are(self, model_name: str, design_name: str = "linear") -> AreOutput:
        report = efficiency_report(get_model(model_name), get_design(design_name))
        return AreOutput(
            schema_version=get_output_rule("schema_version"),
            model=report.model,
            design=report.design,
            C=report.C,
            B=report.B,
            sigma2=_json_number(report.sigma2),
            are_vs_ols=_json_number(report.are_vs_ols),
            are_vs_theil=report.are_vs_theil,
            var_tilde_unitT2=report.var_tilde,
            var_hat=_json_number(report.var_hat),
            var_star=report.var_star,
        )

    def simulate(self, config: SimulationConfig) -> SimulationReport:
        if config.workers == 1 and self.config.workers > 1:
            config = config.model_copy(update={"workers": self.config.workers})
        return run_simulation(config, null_ceiling=self.config.null_ceiling)


# Global service instance
cograd_service = CogradService()

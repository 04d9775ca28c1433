"""
Asymptotic Efficiency
Error-law models, design sequences, the constants C and B, and ARE of beta_tilde
against least squares and Theil-Sen.

All integrals run in u = F(y) space on (0, 1) so heavy tails stay bounded.
"""

import sys
import math
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

# Add config to path
config_path = Path(__file__).parent.parent.parent / "config"
sys.path.insert(0, str(config_path))

from cograd_config import SUPPORTED_DESIGNS, SUPPORTED_MODELS, get_quadrature_rule
from services.errors import (
    DegenerateDesign,
    DomainError,
    InvalidModel,
    ModelNotSampleable,
    QuadratureFailure,
    UnknownModel,
)

logger = logging.getLogger(__name__)

SQRT12 = math.sqrt(12.0)
U_EDGE = 2.0 ** -53

Fn = Callable[[float], float]


@dataclass(frozen=True)
class DistributionModel:
    """Error law F with density f, f', F^-1 and variance.

    ``jumps`` lists (u, size) where the density jumps by ``size`` at F^-1(u);
    ``kinks`` are u-points where f' is discontinuous.
    """

    name: str
    pdf: Fn
    pdf_deriv: Fn
    cdf: Fn
    quantile: Optional[Fn]
    variance: float
    is_symmetric: bool
    score: Optional[Fn] = None
    jumps: Tuple[Tuple[float, float], ...] = ()
    kinks: Tuple[float, ...] = ()

    def score_at(self, y: float) -> float:
        """f'(y) / f(y)"""
        if self.score is not None:
            return float(self.score(y))
        return float(self.pdf_deriv(y)) / float(self.pdf(y))

    def require_quantile(self) -> Fn:
        if self.quantile is None:
            raise ModelNotSampleable(f"Model {self.name!r} has no quantile function")
        return self.quantile

    def density_at_u(self, u: float) -> float:
        """f(F^-1(u))"""
        return float(self.pdf(self.require_quantile()(u)))

    def scaled(self, s: float) -> "DistributionModel":
        """Law of s * Y."""
        if s <= 0:
            raise DomainError(f"Scale must be positive, got {s}")
        pdf, deriv, cdf, q, score = self.pdf, self.pdf_deriv, self.cdf, self.quantile, self.score
        return replace(
            self,
            name=f"{self.name}*{s:g}",
            pdf=lambda y: pdf(y / s) / s,
            pdf_deriv=lambda y: deriv(y / s) / (s * s),
            cdf=lambda y: cdf(y / s),
            quantile=None if q is None else (lambda u: s * q(u)),
            variance=self.variance * s * s,
            score=None if score is None else (lambda y: score(y / s) / s),
            jumps=tuple((u, j / s) for u, j in self.jumps),
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Inverse-cdf draws."""
        q = self.require_quantile()
        u = np.clip(rng.random(size), U_EDGE, 1.0 - U_EDGE)
        return np.asarray(q(u), dtype=float)

    @classmethod
    def from_functions(cls, name: str, pdf: Fn, pdf_deriv: Fn, cdf: Fn, quantile: Fn,
                       variance: float = math.inf, is_symmetric: bool = False,
                       validate: bool = True) -> "DistributionModel":
        """User-supplied law, checked on a quantile grid."""
        model = cls(name, pdf, pdf_deriv, cdf, quantile, variance, is_symmetric)
        if validate:
            validate_model(model)
        return model


def validate_model(model: DistributionModel) -> None:
    """Grid checks: f >= 0, F monotone, F^-1(F(y)) = y, f' matches finite differences."""
    q = model.require_quantile()
    points = get_quadrature_rule("validation_grid_points")
    roundtrip_tol = get_quadrature_rule("quantile_roundtrip_tol")
    deriv_tol = get_quadrature_rule("derivative_check_tol")
    grid = np.linspace(0.0, 1.0, points + 2)[1:-1]
    h = 1e-4

    previous = -math.inf
    for u in grid:
        y = float(q(u))
        f = float(model.pdf(y))
        if not f >= 0:
            raise InvalidModel(f"{model.name}: density negative or NaN at y={y}")
        cu = float(model.cdf(y))
        if cu < previous:
            raise InvalidModel(f"{model.name}: cdf decreases near y={y}")
        previous = cu
        back = float(q(cu))
        if abs(back - y) > roundtrip_tol * max(1.0, abs(y)):
            raise InvalidModel(f"{model.name}: quantile(cdf({y})) = {back}")
        if any(abs(u - k) < 1e-6 for k in model.kinks):
            continue
        numeric = (float(model.pdf(y + h)) - float(model.pdf(y - h))) / (2 * h)
        given = float(model.pdf_deriv(y))
        if abs(numeric - given) > deriv_tol * max(1.0, abs(given)):
            raise InvalidModel(f"{model.name}: pdf_deriv({y}) = {given}, finite difference gives {numeric}")


def _normal() -> DistributionModel:
    d = stats.norm
    return DistributionModel(
        "normal", d.pdf, lambda y: -y * d.pdf(y), d.cdf, d.ppf,
        variance=1.0, is_symmetric=True, score=lambda y: -y,
    )


def _laplace() -> DistributionModel:
    d = stats.laplace
    return DistributionModel(
        "laplace", d.pdf, lambda y: -np.sign(y) * d.pdf(y), d.cdf, d.ppf,
        variance=2.0, is_symmetric=True, score=lambda y: -np.sign(y), kinks=(0.5,),
    )


def _cauchy() -> DistributionModel:
    d = stats.cauchy
    return DistributionModel(
        "cauchy", d.pdf, lambda y: -2.0 * y / (math.pi * (1.0 + y * y) ** 2), d.cdf, d.ppf,
        variance=math.inf, is_symmetric=True, score=lambda y: -2.0 * y / (1.0 + y * y),
    )


def _uniform() -> DistributionModel:
    d = stats.uniform
    return DistributionModel(
        "uniform", d.pdf, lambda y: 0.0 * y, d.cdf, d.ppf,
        variance=1.0 / 12.0, is_symmetric=True, score=lambda y: 0.0 * y,
        jumps=((0.0, 1.0), (1.0, -1.0)),
    )


MODEL_FACTORIES: Dict[str, Callable[[], DistributionModel]] = {
    "normal": _normal,
    "laplace": _laplace,
    "cauchy": _cauchy,
    "uniform": _uniform,
}


def get_model(name: str) -> DistributionModel:
    key = name.strip().lower()
    if key not in SUPPORTED_MODELS or key not in MODEL_FACTORIES:
        raise UnknownModel(f"Unknown model {name!r}; built-ins are {', '.join(SUPPORTED_MODELS)}")
    return MODEL_FACTORIES[key]()


# =============================================================================
# DESIGNS AND PSI
# =============================================================================

def psi_linear(u: float) -> float:
    """(2u^3 - 3u^2) / sqrt(12), the limit for x_i = i."""
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"psi is defined on [0, 1], got u={u}")
    return (2.0 * u ** 3 - 3.0 * u ** 2) / SQRT12


def psi_zero(u: float) -> float:
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"psi is defined on [0, 1], got u={u}")
    return 0.0


@dataclass(frozen=True)
class DesignSequence:
    label: str
    generator: Callable[[int], np.ndarray]
    psi_limit: Optional[Fn] = field(default=None, compare=False)

    def raw_points(self, n: int) -> np.ndarray:
        return np.asarray(self.generator(n), dtype=float)

    def points(self, n: int) -> np.ndarray:
        x = self.raw_points(n)
        if len(x) != n or not np.all(np.diff(x) > 0):
            raise DegenerateDesign(f"Design {self.label!r} is not strictly increasing at n={n}")
        return x

    def t_squared(self, n: int) -> float:
        """T^2 = sum (x_i - xbar)^2"""
        x = self.raw_points(n)
        return float(np.sum((x - x.mean()) ** 2))

    def noether_ratio(self, n: int) -> float:
        """T^2 / M with M = max (x_i - xbar)^2."""
        x = self.raw_points(n)
        dev = (x - x.mean()) ** 2
        return float(dev.sum() / dev.max())

    def psi(self) -> Fn:
        return self.psi_limit if self.psi_limit is not None else tabulated_psi(self)


def linear_design() -> DesignSequence:
    return DesignSequence("linear", lambda n: np.arange(1, n + 1, dtype=float), psi_linear)


def geometric_design(alpha: float = 2.0) -> DesignSequence:
    """x_i = alpha^i, rescaled by alpha^-n (psi is scale invariant)."""
    if alpha <= 1:
        raise DomainError(f"Geometric design needs alpha > 1, got {alpha}")
    return DesignSequence(
        f"geometric({alpha:g})",
        lambda n: np.power(alpha, np.arange(1, n + 1, dtype=float) - n),
        psi_zero,
    )


def get_design(name: str) -> DesignSequence:
    key = name.strip().lower()
    if key not in SUPPORTED_DESIGNS:
        raise UnknownModel(f"Unknown design {name!r}; built-ins are {', '.join(SUPPORTED_DESIGNS)}")
    return linear_design() if key == "linear" else geometric_design()


def _psi_partial_sums(x: np.ndarray, us: np.ndarray) -> np.ndarray:
    """(1 / (N^1.5 T)) * sum_{i <= floor(N u)} (x_i - xbar)(N u - i) for each u."""
    n = len(x)
    dev = x - x.mean()
    t = math.sqrt(float(np.dot(dev, dev)))
    idx = np.arange(1, n + 1, dtype=float)
    s1 = np.concatenate(([0.0], np.cumsum(dev)))
    s2 = np.concatenate(([0.0], np.cumsum(dev * idx)))
    k = np.floor(n * us + 1e-9).astype(np.int64).clip(0, n)
    return (n * us * s1[k] - s2[k]) / (n ** 1.5 * t)


def psi_numeric(design: DesignSequence, u: float, n: int) -> float:
    """Finite-N value of psi for a design."""
    if not 0.0 < u <= 1.0:
        raise DomainError(f"psi_numeric needs 0 < u <= 1, got {u}")
    if n < 100:
        raise DomainError(f"psi_numeric needs n >= 100, got {n}")
    return float(_psi_partial_sums(design.raw_points(n), np.asarray([u], dtype=float))[0])


def tabulated_psi(design: DesignSequence, n: Optional[int] = None, points: Optional[int] = None) -> Fn:
    """psi interpolated from a finite-N grid, for designs without a closed form."""
    n = n or get_quadrature_rule("psi_table_n")
    points = points or get_quadrature_rule("psi_table_points")
    grid = np.linspace(0.0, 1.0, points)
    values = _psi_partial_sums(design.raw_points(n), grid)
    values[0] = 0.0
    logger.debug(f"Tabulated psi for {design.label}: n={n}, {points} points")

    def psi(u: float) -> float:
        if not 0.0 <= u <= 1.0:
            raise DomainError(f"psi is defined on [0, 1], got u={u}")
        return float(np.interp(u, grid, values))

    return psi


# =============================================================================
# QUADRATURE
# =============================================================================

def _integrate(fn: Fn, abs_tol: float, points: Sequence[float] = (), what: str = "integral") -> float:
    fail_tol = get_quadrature_rule("c_fail_tol")
    limit = get_quadrature_rule("subdivision_limit")
    inner = [p for p in points if 0.0 < p < 1.0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(
            fn, 0.0, 1.0, epsabs=abs_tol, epsrel=1e-10, limit=limit, points=inner or None,
        )
    if not math.isfinite(value) or err > max(fail_tol, abs_tol):
        raise QuadratureFailure(f"{what}: error estimate {err:.3g} exceeds {max(fail_tol, abs_tol):.3g}")
    return float(value)


def compute_C(model: DistributionModel, psi: Fn = psi_linear) -> float:
    """C = int_0^1 [psi(1-u) - psi(u)] (f'/f)(F^-1(u)) du plus density-jump terms."""
    q = model.require_quantile()
    abs_tol = get_quadrature_rule("c_abs_tol")

    def integrand(u):
        return (psi(1.0 - u) - psi(u)) * model.score_at(q(u))

    value = _integrate(integrand, abs_tol, model.kinks, what=f"C for {model.name}")
    value += sum(j * (psi(1.0 - u) - psi(u)) for u, j in model.jumps)

    if model.is_symmetric:
        even = -2.0 * _integrate(lambda u: psi(u) * model.score_at(q(u)), abs_tol, model.kinks,
                                 what=f"symmetric C for {model.name}")
        even -= 2.0 * sum(j * psi(u) for u, j in model.jumps)
        if abs(even - value) > get_quadrature_rule("symmetric_route_tol"):
            raise QuadratureFailure(f"C routes disagree for {model.name}: {value} vs {even}")
    logger.debug(f"C[{model.name}] = {value}")
    return value


def compute_C_alt(model: DistributionModel) -> float:
    """-sqrt(12) * int F(1-F) f^2 dy, valid for the linear design."""
    abs_tol = get_quadrature_rule("c_abs_tol")
    inner = _integrate(lambda u: u * (1.0 - u) * model.density_at_u(u), abs_tol, model.kinks,
                       what=f"alternate C for {model.name}")
    return -SQRT12 * inner


def compute_B(model: DistributionModel) -> float:
    """B = int f^2 = int_0^1 f(F^-1(u)) du."""
    return _integrate(model.density_at_u, get_quadrature_rule("b_abs_tol"), model.kinks,
                      what=f"B for {model.name}")


def mean_difference(model: DistributionModel) -> float:
    """Delta(F) = 2 int F(1-F) dy."""
    if not math.isfinite(model.variance):
        raise DomainError(f"Mean difference needs a finite variance; {model.name} has none")
    return 2.0 * _integrate(lambda u: u * (1.0 - u) / model.density_at_u(u),
                            get_quadrature_rule("b_abs_tol"), model.kinks,
                            what=f"mean difference for {model.name}")


def fisher_information(model: DistributionModel) -> float:
    """int (f'/f)^2 f; infinite when the density jumps."""
    if model.jumps:
        return math.inf
    q = model.require_quantile()
    return _integrate(lambda u: model.score_at(q(u)) ** 2, get_quadrature_rule("c_abs_tol"),
                      model.kinks, what=f"Fisher information for {model.name}")


def are_vs_theil_spread(model: DistributionModel) -> float:
    """3/2 (1 - int (2F-1)^2 f^2 / int f^2)^2, equal to 2C^2/B^2 for the linear design."""
    b = compute_B(model)
    spread = _integrate(lambda u: (2.0 * u - 1.0) ** 2 * model.density_at_u(u),
                        get_quadrature_rule("b_abs_tol"), model.kinks,
                        what=f"spread for {model.name}")
    return 1.5 * (1.0 - spread / b) ** 2


def universal_ratio_check(model: DistributionModel) -> Tuple[float, bool]:
    """(sigma / Delta, sigma / Delta >= sqrt(3)/2)."""
    ratio = math.sqrt(model.variance) / mean_difference(model)
    return ratio, ratio >= math.sqrt(3.0) / 2.0 - 1e-8


@dataclass(frozen=True)
class EfficiencyReport:
    model: str
    design: str
    C: float
    B: float
    sigma2: float
    are_vs_ols: float
    are_vs_theil: float
    var_tilde: float
    var_hat: float
    var_star: float

    def ols_lower_bound(self, delta: float) -> float:
        """(8/9)(sigma/Delta)^2"""
        return 8.0 / 9.0 * self.sigma2 / (delta * delta)


def efficiency_report(model: DistributionModel, design: Optional[DesignSequence] = None) -> EfficiencyReport:
    """Asymptotic variances (per unit T^2) and ARE against least squares and Theil-Sen."""
    design = design or linear_design()
    c = compute_C(model, design.psi())
    if abs(c) < get_quadrature_rule("degenerate_c_tol"):
        raise DegenerateDesign(f"C = {c:.3g} for {model.name} under {design.label}; variance undefined")
    b = compute_B(model)
    sigma2 = model.variance
    report = EfficiencyReport(
        model=model.name,
        design=design.label,
        C=c,
        B=b,
        sigma2=sigma2,
        are_vs_ols=math.inf if math.isinf(sigma2) else 24.0 * sigma2 * c * c,
        are_vs_theil=2.0 * c * c / (b * b),
        var_tilde=1.0 / (24.0 * c * c),
        var_hat=sigma2,
        var_star=1.0 / (12.0 * b * b),
    )
    logger.info(f"Efficiency for {model.name}/{design.label}: ARE(ols)={report.are_vs_ols:.6g}, "
                f"ARE(theil)={report.are_vs_theil:.6g}")
    return report

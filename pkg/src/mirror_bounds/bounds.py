"""Confidence intervals on the optimal value from solver runs.

Three constructions:

* an analytic two-sided interval around the run's averaged oracle value,
  calibrated by three tail parameters (one closed form for each side, one by
  bisection);
* a comparison interval whose lower limit minimizes the aggregated affine
  model of the run over the feasible set (one linear minimization), valid for
  theta-scaled constant-step runs;
* the classical asymptotic interval around a sample-average optimal value.

All tail calibrations are bisections on strictly decreasing maps with
residuals driven to 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import ConfigError, ConstantSheet, FeasibleSet, MethodMismatchError, RunRecord
from .problems import SaaResult
from .prox import ProximalSetup
from .solvers import smd_step_size, rsa_step_size, theta_step_size


@dataclass(frozen=True)
class ConfidenceInterval:
    low: float
    high: float
    level: float
    method: str  # "smd1" | "smd2" | "asymptotic"
    tails: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    flags: tuple = ()

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ConfigError("interval endpoints must be finite")
        if self.low > self.high:
            raise ConfigError("interval endpoints are crossed")

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


# Acklam's rational approximation to the standard normal quantile, polished by
# one Halley step on the erfc residual (absolute error far below 1e-9).
_QA = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
       1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_QB = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
       6.680131188771972e01, -1.328068155288572e01)
_QC = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
       -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_QD = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
       3.754408661907416e00)


def normal_quantile(p: float) -> float:
    """Standard normal quantile (inverse CDF)."""
    if not 0.0 < p < 1.0:
        raise ConfigError("quantile argument must lie strictly inside (0, 1)")
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]) / (
            (((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0
        )
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((_QA[0] * r + _QA[1]) * r + _QA[2]) * r + _QA[3]) * r + _QA[4]) * r + _QA[5]) * q / (
            ((((_QB[0] * r + _QB[1]) * r + _QB[2]) * r + _QB[3]) * r + _QB[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]) / (
            (((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0
        )
    # Halley polish on the CDF residual
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def _bisect_decreasing(fn, target: float, lo: float = 1e-6, hi: float = 50.0, residual: float = 1e-12) -> float:
    """Root of fn(t) = target for strictly decreasing fn on [lo, hi]."""
    f_lo, f_hi = fn(lo), fn(hi)
    if not (f_lo > f_hi):
        raise ConfigError("calibration map is not decreasing on the bracket")
    if not (f_lo >= target >= f_hi):
        raise ConfigError("calibration target is outside the bracket")
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        val = fn(mid)
        if abs(val - target) <= residual:
            return mid
        if val > target:
            lo = mid
        else:
            hi = mid
    raise ConfigError("calibration bisection failed to reach its residual target")


@dataclass(frozen=True)
class CalibratedTails:
    """The three tail parameters splitting the miscoverage budget."""

    upper: float
    gap: float
    lower: float


def calibrate_thetas_smd1(alpha: float) -> CalibratedTails:
    """Tail parameters making the two-sided analytic interval hold at level 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    upper = 2.0 * math.sqrt(math.log(2.0 / alpha))
    lower = 2.0 * math.sqrt(math.log(4.0 / alpha))
    gap = _bisect_decreasing(lambda t: math.exp(1.0 - t * t) + math.exp(-t * t / 4.0), alpha / 4.0)
    return CalibratedTails(upper=upper, gap=gap, lower=lower)


def calibrate_theta_smd2(alpha: float, n_calls: int) -> float:
    """Tail parameter of the comparison lower bound at level 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    root_n = math.sqrt(n_calls)
    return _bisect_decreasing(
        lambda t: 6.0 * math.exp(-t * t / 3.0) + math.exp(-t * t / 12.0) + math.exp(-0.75 * t * root_n),
        alpha / 2.0,
    )


def gap_coefficients(sheet: ConstantSheet, *, radius: float, strong_convexity: float = 1.0) -> tuple[float, float]:
    """Bias and deviation coefficients of the optimality-gap tail bound.

    ``radius`` is the start radius for Euclidean runs or the omega-radius for
    mirror runs; ``strong_convexity`` is 1 for the Euclidean geometry.
    """
    l2, m2 = sheet.grad_bound**2, sheet.grad_noise**2
    root = math.sqrt(2.0 * (m2 + l2) * strong_convexity)
    k1 = radius * (m2 + 2.0 * l2) / root
    k2 = radius * m2 / root + 2.0 * radius * sheet.grad_noise / math.sqrt(strong_convexity) + sheet.value_noise
    return k1, k2


def _check_formula_run(run: RunRecord, sheet: ConstantSheet, setup: ProximalSetup) -> None:
    if run.step_rule != "formula":
        raise MethodMismatchError("analytic interval needs a run with the formula stepsize")
    if run.algorithm == "rsa":
        expected = rsa_step_size(sheet, run.n_calls, run.start_radius)
    elif run.algorithm == "smd":
        expected = smd_step_size(sheet, setup, run.n_calls)
    else:
        raise MethodMismatchError(f"analytic interval does not apply to {run.algorithm!r} runs")
    got = float(run.steps[0])
    if abs(got - expected) > 1e-12 * max(1.0, expected):
        raise MethodMismatchError("run stepsize does not match the formula for this sheet/setup")


def ci_smd1(run: RunRecord, sheet: ConstantSheet, setup: ProximalSetup, alpha: float) -> ConfidenceInterval:
    """Analytic two-sided interval around the run's averaged oracle value."""
    _check_formula_run(run, sheet, setup)
    if run.algorithm == "rsa":
        k1, k2 = gap_coefficients(sheet, radius=run.start_radius, strong_convexity=1.0)
    else:
        k1, k2 = gap_coefficients(sheet, radius=setup.omega_radius, strong_convexity=setup.strong_convexity)
    tails = calibrate_thetas_smd1(alpha)
    root_n = math.sqrt(run.n_calls)
    up_margin = tails.upper * sheet.value_noise / root_n
    low_margin = (k1 + tails.gap * (k2 - sheet.value_noise)) / root_n + tails.lower * sheet.value_noise / root_n
    return ConfidenceInterval(
        low=run.value_estimate - low_margin,
        high=run.value_estimate + up_margin,
        level=1.0 - alpha,
        method="smd1",
        tails={"upper": tails.upper, "gap": tails.gap, "lower": tails.lower},
        constants={"gap_bias": k1, "gap_tail": k2},
    )


def model_lower_value(run: RunRecord, feasible_set: FeasibleSet) -> float:
    """Minimum over the set of the run's averaged affine model (one LMO call)."""
    if run.lin_grad_sum is None:
        raise MethodMismatchError("run is missing the aggregated affine model")
    mean_grad = run.lin_grad_sum / run.n_calls
    vertex = feasible_set.lmo(mean_grad)
    return run.lin_offset_sum / run.n_calls + float(mean_grad @ vertex)


def ci_smd2(
    run: RunRecord,
    sheet: ConstantSheet,
    setup: ProximalSetup,
    feasible_set: FeasibleSet,
    alpha: float,
) -> ConfidenceInterval:
    """Comparison interval: aggregated-model lower limit, analytic upper limit.

    Requires a constant-step run with step theta-scaled against the
    exponential-moment bound of the stochastic subgradients.
    """
    if run.theta is None or run.step_rule != "override":
        raise MethodMismatchError("comparison interval needs a theta-scaled constant-step run")
    theta = run.theta
    expected = theta_step_size(sheet, setup, run.n_calls, theta)
    if abs(float(run.steps[0]) - expected) > 1e-12 * max(1.0, expected):
        raise MethodMismatchError("run stepsize does not match its declared theta")
    root_n = math.sqrt(run.n_calls)
    scale = setup.omega_radius * sheet.grad_moment_or_default / math.sqrt(setup.strong_convexity)
    t_gap = calibrate_theta_smd2(alpha, run.n_calls)
    margin = (
        (1.0 / (2.0 * theta) + 2.0 * theta) * scale
        + t_gap * (sheet.value_noise + (8.0 + 2.0 * theta / root_n) * scale)
    ) / root_n
    f_model = model_lower_value(run, feasible_set)
    t_up = 2.0 * math.sqrt(math.log(2.0 / alpha))
    return ConfidenceInterval(
        low=f_model - margin,
        high=run.value_estimate + t_up * sheet.value_noise / root_n,
        level=1.0 - alpha,
        method="smd2",
        tails={"upper": t_up, "gap": t_gap},
        constants={"model_lower_value": f_model, "moment_scale": scale, "theta": theta},
    )


def ci_asymptotic(saa: SaaResult, alpha: float) -> ConfidenceInterval:
    """Normal-theory interval around the sample-average optimal value."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    flags = ()
    if saa.sigma == 0.0:
        flags = ("degenerate-sample",)
    half = normal_quantile(1.0 - alpha / 2.0) * saa.sigma / math.sqrt(saa.n)
    return ConfidenceInterval(
        low=saa.value - half,
        high=saa.value + half,
        level=1.0 - alpha,
        method="asymptotic",
        constants={"sigma": saa.sigma, "n": saa.n},
        flags=flags,
    )

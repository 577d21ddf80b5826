"""Averaged stochastic subgradient solvers: projected (RSA), mirror (SMD), multistep.

One core loop drives every variant: iterate a prox step on fresh oracle draws,
keep step-weighted running averages of iterates and oracle values, and stream
the aggregates needed later by the bound constructions (sum of subgradients and
sum of affine-model offsets).  Multistep variants restart the loop on shrinking
steps with geometrically growing per-stage budgets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BudgetTooSmallError,
    ConfigError,
    ConstantSheet,
    NumericalError,
    ProblemSpec,
    RunRecord,
    StageRecord,
    UnsupportedSetupError,
    as_vector,
)
from .prox import EuclideanSetup, ProximalSetup, prox_ball_restricted


@dataclass
class SolverConfig:
    """Knobs shared by the single-stage solvers.

    ``step_override`` replaces the formula step (used by the comparison bound's
    theta-parameterized runs); ``theta`` is recorded so bound constructions can
    check what produced the run.  ``trace_stride`` > 0 records the running
    value estimate (and exact objective at the running average when
    ``eval_exact_f``) every that-many oracle calls.
    """

    n_calls: int
    seed: int | None = 0
    step_override: float | None = None
    theta: float | None = None
    start: np.ndarray | None = None
    thin_stride: int | None = None
    trace_stride: int | None = None
    eval_exact_f: bool = False

    def __post_init__(self):
        if self.n_calls < 2:
            raise ConfigError("n_calls must be at least 2")
        if self.step_override is not None and not self.step_override > 0:
            raise ConfigError("step override must be positive")
        if self.theta is not None and not self.theta > 0:
            raise ConfigError("theta must be positive")


@dataclass
class MultistepSchedule:
    """Per-stage budgets, constant steps, and (optional) trust radii."""

    stage_lengths: list[int]
    stage_steps: list[float]
    stage_radii: list[float] | None = None

    def __post_init__(self):
        if len(self.stage_lengths) != len(self.stage_steps):
            raise ConfigError("schedule lengths and steps must align")
        if any(n < 2 for n in self.stage_lengths):
            raise ConfigError("every stage needs at least 2 oracle calls")
        steps = self.stage_steps
        if any(b >= a for a, b in zip(steps, steps[1:])):
            raise ConfigError("stage steps must be strictly decreasing")

    @property
    def budget(self) -> int:
        return sum(n - 1 for n in self.stage_lengths)


def rsa_step_size(sheet: ConstantSheet, n_calls: int, start_radius: float) -> float:
    """Constant step for the projected-subgradient run, from the start radius."""
    return start_radius / (math.sqrt(2.0 * (sheet.grad_noise**2 + sheet.grad_bound**2)) * math.sqrt(n_calls))


def smd_step_size(sheet: ConstantSheet, setup: ProximalSetup, n_calls: int) -> float:
    """Constant step for the mirror-descent run, from the omega-radius."""
    return (
        setup.omega_radius
        * math.sqrt(setup.strong_convexity)
        / (math.sqrt(2.0 * (sheet.grad_noise**2 + sheet.grad_bound**2)) * math.sqrt(n_calls))
    )


def theta_step_size(sheet: ConstantSheet, setup: ProximalSetup, n_calls: int, theta: float) -> float:
    """Constant step scaled by theta against the subgradient exponential-moment bound."""
    return (
        theta
        * math.sqrt(setup.strong_convexity)
        * setup.omega_radius
        / (sheet.grad_moment_or_default * math.sqrt(n_calls))
    )


@dataclass
class _CoreResult:
    values: np.ndarray
    step: float
    solution: np.ndarray
    value_estimate: float
    lin_grad_sum: np.ndarray
    lin_offset_sum: float
    iterate_trace: list = field(default_factory=list)
    value_trace: list = field(default_factory=list)


def _run_loop(
    problem: ProblemSpec,
    setup: ProximalSetup,
    n_calls: int,
    gamma: float,
    start: np.ndarray,
    rng: np.random.Generator,
    *,
    ball: tuple[np.ndarray, float] | None = None,
    thin_stride: int | None = None,
    trace_stride: int | None = None,
    eval_exact_f: bool = False,
    iter_offset: int = 0,
) -> _CoreResult:
    n_dim = problem.feasible_set.dimension
    state = setup.init_state(start)
    values = np.empty(n_calls)
    x_sum = np.zeros(n_dim)
    grad_sum = np.zeros(n_dim)
    offset_sum = 0.0
    iterate_trace: list = []
    value_trace: list = []
    for tau in range(1, n_calls + 1):
        x = setup.primal(state)
        if not problem.feasible_set.contains(x):
            raise NumericalError(f"iterate {tau} left the feasible set")
        if ball is not None:
            center, radius = ball
            if float(np.linalg.norm(x - center)) > radius + 1e-7:
                raise NumericalError(f"iterate {tau} left the stage trust ball")
        xi = problem.sample_xi(rng)
        sample = problem.oracle(x, xi)
        values[tau - 1] = sample.value
        x_sum += x
        grad_sum += sample.grad
        offset_sum += sample.value - float(sample.grad @ x)
        if thin_stride and (tau % thin_stride == 0 or tau == 1):
            iterate_trace.append((iter_offset + tau, x.copy()))
        if trace_stride and (tau % trace_stride == 0 or tau == n_calls):
            running_avg = x_sum / tau
            running_val = float(np.mean(values[:tau]))
            f_val = problem.exact_f(running_avg) if eval_exact_f else math.nan
            value_trace.append((iter_offset + tau, running_val, f_val))
        if tau < n_calls:
            zeta = gamma * sample.grad
            if ball is not None:
                state = prox_ball_restricted(setup, ball[0], ball[1], state, zeta)
            else:
                state = setup.step_state(state, zeta)
    # constant steps: the weighted average is the plain mean, but keep the
    # weighted form so overrides and schedules stay correct
    solution = x_sum / n_calls
    estimate = float(np.mean(values))
    return _CoreResult(values, gamma, solution, estimate, grad_sum, offset_sum, iterate_trace, value_trace)


def _single_run(problem, setup, config: SolverConfig, algorithm: str) -> RunRecord:
    start = (
        as_vector(config.start, dim=problem.feasible_set.dimension, name="start")
        if config.start is not None
        else (problem.feasible_set.start_point() if algorithm == "rsa" else setup.center)
    )
    problem.feasible_set.require_member(start)
    start_radius = problem.feasible_set.max_distance_from(start, setup.norm)
    if config.step_override is not None:
        gamma = config.step_override
        step_rule = "override"
    elif algorithm == "rsa":
        gamma = rsa_step_size(problem.sheet, config.n_calls, start_radius)
        step_rule = "formula"
    else:
        gamma = smd_step_size(problem.sheet, setup, config.n_calls)
        step_rule = "formula"
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    core = _run_loop(
        problem,
        setup,
        config.n_calls,
        gamma,
        start,
        rng,
        thin_stride=config.thin_stride,
        trace_stride=config.trace_stride,
        eval_exact_f=config.eval_exact_f,
    )
    return RunRecord(
        algorithm=algorithm,
        setup=setup.name,
        n_calls=config.n_calls,
        budget_used=config.n_calls,
        seed=config.seed,
        start=start,
        start_radius=start_radius,
        steps=np.full(config.n_calls, core.step),
        values=core.values,
        solution=core.solution,
        value_estimate=core.value_estimate,
        step_rule=step_rule,
        theta=config.theta,
        lin_grad_sum=core.lin_grad_sum,
        lin_offset_sum=core.lin_offset_sum,
        duration=time.perf_counter() - t0,
        iterate_trace=core.iterate_trace,
        value_trace=core.value_trace,
    )


def rsa_run(problem: ProblemSpec, config: SolverConfig) -> RunRecord:
    """Projected stochastic subgradient with averaging (Euclidean geometry)."""
    setup = EuclideanSetup(problem.feasible_set)
    return _single_run(problem, setup, config, "rsa")


def smd_run(problem: ProblemSpec, setup: ProximalSetup, config: SolverConfig) -> RunRecord:
    """Mirror descent with averaging under the given proximal setup."""
    if setup.feasible_set.dimension != problem.feasible_set.dimension:
        raise UnsupportedSetupError("setup was built for a set of a different dimension")
    return _single_run(problem, setup, config, "smd")


def _growth_params(sheet: ConstantSheet, setup: ProximalSetup) -> tuple[float, float, float]:
    if sheet.growth_exponent is None or sheet.growth_modulus is None:
        raise ConfigError("multistep solvers need uniform-convexity constants on the sheet")
    if setup.quad_growth is None:
        raise ConfigError("multistep solvers need a quadratic-growth constant for the setup")
    return sheet.growth_exponent, sheet.growth_modulus, setup.quad_growth


def _stage_length(sheet: ConstantSheet, setup: ProximalSetup, t: int, radius: float) -> int:
    rho, mu_f, quad = _growth_params(sheet, setup)
    noise = sheet.grad_bound**2 + sheet.grad_noise**2
    expo = 3.0 + 2.0 * (t - 1) * (rho - 1.0) / rho
    return 1 + math.ceil(
        2.0**expo * noise * quad / (mu_f**2 * setup.strong_convexity * radius ** (2.0 * (rho - 1.0)))
    )


def _stage_step(sheet: ConstantSheet, setup: ProximalSetup, t: int, n_t: int, radius: float) -> float:
    rho, _, quad = _growth_params(sheet, setup)
    noise = sheet.grad_bound**2 + sheet.grad_noise**2
    return (
        radius
        / (2.0 ** ((t - 1) / rho) * math.sqrt(n_t))
        * math.sqrt(quad * setup.strong_convexity / (2.0 * noise))
    )


def msmd_schedule(
    sheet: ConstantSheet, setup: ProximalSetup, m: int, set_radius: float | None = None
) -> MultistepSchedule:
    """Per-stage budgets and steps for the multistep solver (closed-form sizing)."""
    if m < 1:
        raise ConfigError("need at least one stage")
    rho, _, _ = _growth_params(sheet, setup)
    radius = sheet.set_radius if set_radius is None else set_radius
    lengths = [_stage_length(sheet, setup, t, radius) for t in range(1, m + 1)]
    steps = [_stage_step(sheet, setup, t, n_t, radius) for t, n_t in enumerate(lengths, start=1)]
    radii = [radius / 2.0 ** ((t - 1) / rho) for t in range(1, m + 1)]
    return MultistepSchedule(lengths, steps, radii)


def budget_fit_schedule(
    sheet: ConstantSheet,
    setup: ProximalSetup,
    n_total: int,
    m: int,
    set_radius: float | None = None,
) -> MultistepSchedule:
    """Geometric stage schedule scaled to consume exactly ``n_total`` oracle calls.

    Keeps the doubling structure and per-stage step formula of the closed-form
    sizing but replaces its base constant, which is far too conservative to
    fit experiment-scale budgets, by the largest one that fits; leftover calls
    go to the last stage.
    """
    if m < 1:
        raise ConfigError("need at least one stage")
    rho, _, quad = _growth_params(sheet, setup)
    mu_w = setup.strong_convexity
    noise = sheet.grad_bound**2 + sheet.grad_noise**2
    radius = sheet.set_radius if set_radius is None else set_radius
    beta = 2.0 * (rho - 1.0) / rho
    weights = [2.0 ** (beta * (t - 1)) for t in range(1, m + 1)]
    if n_total < m + sum(int(w) for w in weights):
        raise BudgetTooSmallError(f"budget {n_total} cannot host {m} geometric stages")
    lo, hi = 1.0, float(n_total)
    for _ in range(200):
        c = 0.5 * (lo + hi)
        used = sum(math.ceil(c * w) for w in weights)
        if used > n_total:
            hi = c
        else:
            lo = c
    c = lo
    lengths = [1 + math.ceil(c * w) for w in weights]
    lengths[-1] += n_total - sum(n - 1 for n in lengths)
    steps = [
        radius / (2.0 ** ((t - 1) / rho) * math.sqrt(lengths[t - 1])) * math.sqrt(quad * mu_w / (2.0 * noise))
        for t in range(1, m + 1)
    ]
    radii = [radius / 2.0 ** ((t - 1) / rho) for t in range(1, m + 1)]
    return MultistepSchedule(lengths, steps, radii)


def _multi_run(
    problem: ProblemSpec,
    setup: ProximalSetup,
    schedule: MultistepSchedule,
    seed,
    start,
    *,
    algorithm: str,
    ball: bool = False,
    trace_stride: int | None = None,
    eval_exact_f: bool = False,
    notes: list[str] | None = None,
) -> RunRecord:
    start = (
        as_vector(start, dim=problem.feasible_set.dimension, name="start")
        if start is not None
        else problem.feasible_set.start_point()
    )
    problem.feasible_set.require_member(start)
    start_radius = problem.feasible_set.max_distance_from(start, setup.norm)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    y = start
    stages: list[StageRecord] = []
    iterate_trace: list = []
    value_trace: list = []
    total_calls = 0
    core = None
    for t, (n_t, gamma_t) in enumerate(zip(schedule.stage_lengths, schedule.stage_steps), start=1):
        radius_t = schedule.stage_radii[t - 1] if schedule.stage_radii else None
        ball_arg = (y.copy(), radius_t) if ball else None
        core = _run_loop(
            problem,
            setup,
            n_t,
            gamma_t,
            y,
            rng,
            ball=ball_arg,
            trace_stride=trace_stride,
            eval_exact_f=eval_exact_f,
            iter_offset=total_calls,
        )
        stages.append(
            StageRecord(t, n_t, gamma_t, radius_t, y.copy(), core.solution.copy(), core.value_estimate)
        )
        iterate_trace.extend(core.iterate_trace)
        value_trace.extend(core.value_trace)
        y = core.solution
        total_calls += n_t
    return RunRecord(
        algorithm=algorithm,
        setup=setup.name,
        n_calls=total_calls,
        budget_used=schedule.budget,
        seed=seed,
        start=start,
        start_radius=start_radius,
        steps=np.full(schedule.stage_lengths[-1], schedule.stage_steps[-1]),
        values=core.values,
        solution=y,
        value_estimate=core.value_estimate,
        step_rule="stage",
        theta=None,
        lin_grad_sum=core.lin_grad_sum,
        lin_offset_sum=core.lin_offset_sum,
        duration=time.perf_counter() - t0,
        stages=stages,
        iterate_trace=iterate_trace,
        value_trace=value_trace,
        notes=list(notes or []),
    )


def msmd_run(
    problem: ProblemSpec,
    setup: ProximalSetup,
    m: int,
    seed=0,
    start=None,
    schedule: MultistepSchedule | None = None,
    trace_stride: int | None = None,
    eval_exact_f: bool = False,
) -> RunRecord:
    """Multistep mirror descent: m restarts with shrinking steps, growing budgets."""
    if schedule is None:
        start_for_radius = start if start is not None else problem.feasible_set.start_point()
        radius = problem.feasible_set.max_distance_from(np.asarray(start_for_radius, float), setup.norm)
        schedule = msmd_schedule(problem.sheet, setup, m, radius)
    return _multi_run(
        problem, setup, schedule, seed, start,
        algorithm="msmd", trace_stride=trace_stride, eval_exact_f=eval_exact_f,
    )


def growth_rate_constant(sheet: ConstantSheet, setup: ProximalSetup, set_radius: float | None = None) -> float:
    """Base constant of the geometric stage sizing (stage budgets ~ this x 2^(beta t))."""
    rho, mu_f, quad = _growth_params(sheet, setup)
    radius = sheet.set_radius if set_radius is None else set_radius
    noise = sheet.grad_bound**2 + sheet.grad_noise**2
    return 8.0 * noise * quad / (mu_f**2 * setup.strong_convexity * radius ** (2.0 * (rho - 1.0)))


def budget_feasibility_margin(sheet: ConstantSheet, setup: ProximalSetup, n_total: int, set_radius=None) -> float:
    """Positive when the budget clears the conservative multistep sizing bound."""
    rho, _, _ = _growth_params(sheet, setup)
    beta = 2.0 * (rho - 1.0) / rho
    a_const = growth_rate_constant(sheet, setup, set_radius)
    rhs = 1.0 + (2.0 * (2.0**beta + 1.0) / (beta * math.log(2.0))) * math.log(
        1.0 + (2.0**beta - 1.0) / a_const * n_total
    )
    return n_total - rhs


def msmd_budget_run(
    problem: ProblemSpec,
    setup: ProximalSetup,
    n_total: int,
    seed=0,
    start=None,
    trace_stride: int | None = None,
    eval_exact_f: bool = False,
) -> RunRecord:
    """Multistep run driven by an oracle budget: stages run while calls remain.

    Stage sizes follow the closed-form geometric sizing; the stage counter is
    rolled back by one when the next stage would exceed the budget, and the
    outputs are those of the last completed stage.
    """
    rho, _, _ = _growth_params(problem.sheet, setup)
    start_arr = (
        as_vector(start, dim=problem.feasible_set.dimension)
        if start is not None
        else problem.feasible_set.start_point()
    )
    radius = problem.feasible_set.max_distance_from(start_arr, setup.norm)
    n1 = _stage_length(problem.sheet, setup, 1, radius)
    if n_total < n1 - 1:
        raise BudgetTooSmallError(f"budget {n_total} is below the first stage cost {n1 - 1}")
    notes = []
    a_const = growth_rate_constant(problem.sheet, setup, radius)
    beta = 2.0 * (rho - 1.0) / rho
    notes.append(f"stage growth constant {a_const:.6g}, growth exponent rate {beta:.6g}")
    if budget_feasibility_margin(problem.sheet, setup, n_total, radius) <= 0:
        notes.append("budget below the conservative multistep sizing bound; running anyway")
    # count completed stages exactly as the budgeted loop does: the counter is
    # charged for the next stage before checking whether it still fits
    completed = 0
    t = 1
    nb = n1 - 1
    while nb <= n_total:
        completed = t
        t += 1
        nb += _stage_length(problem.sheet, setup, t, radius) - 1
    lengths = [_stage_length(problem.sheet, setup, k, radius) for k in range(1, completed + 1)]
    steps = [_stage_step(problem.sheet, setup, k, n_k, radius) for k, n_k in enumerate(lengths, start=1)]
    schedule = MultistepSchedule(lengths, steps, [radius / 2.0 ** ((k - 1) / rho) for k in range(1, completed + 1)])
    return _multi_run(
        problem, setup, schedule, seed, start,
        algorithm="msmd-budget", trace_stride=trace_stride, eval_exact_f=eval_exact_f, notes=notes,
    )


def ball_stage_coefficients(sheet: ConstantSheet, setup: ProximalSetup, set_radius=None) -> tuple[float, float]:
    """Bias/deviation coefficients sizing the trust-region stages."""
    rho, mu_f, quad = _growth_params(sheet, setup)
    radius = sheet.set_radius if set_radius is None else set_radius
    noise = sheet.grad_bound**2 + sheet.grad_noise**2
    root = math.sqrt(quad / (2.0 * setup.strong_convexity * noise))
    denom = mu_f * radius ** (rho - 1.0)
    k1 = root * (2.0 * sheet.grad_bound**2 + sheet.grad_noise**2) / denom
    k2 = (sheet.grad_noise**2 * root + 2.0 * sheet.grad_noise) / denom
    return k1, k2


def msmd_ball_run(
    problem: ProblemSpec,
    setup: ProximalSetup,
    m: int,
    seed=0,
    theta: float = 1.0,
    start=None,
    trace_stride: int | None = None,
) -> RunRecord:
    """Multistep run whose prox is restricted to shrinking balls around stage starts."""
    if not isinstance(setup, EuclideanSetup):
        raise UnsupportedSetupError("ball-restricted multistep requires the Euclidean setup")
    rho, _, _ = _growth_params(problem.sheet, setup)
    start_arr = (
        as_vector(start, dim=problem.feasible_set.dimension)
        if start is not None
        else problem.feasible_set.start_point()
    )
    radius = problem.feasible_set.max_distance_from(start_arr, setup.norm)
    base = msmd_schedule(problem.sheet, setup, m, radius)
    k1, k2 = ball_stage_coefficients(problem.sheet, setup, radius)
    lengths = []
    for k in range(1, m + 1):
        sized = math.ceil(2.0 ** (2 * k - 2.0 * (k - 1) / rho) * (k1 + theta * k2) ** 2)
        lengths.append(max(base.stage_lengths[k - 1], int(sized)))
    noise = problem.sheet.grad_bound**2 + problem.sheet.grad_noise**2
    quad, mu_w = setup.quad_growth, setup.strong_convexity
    steps = [
        radius / (2.0 ** ((k - 1) / rho) * math.sqrt(lengths[k - 1])) * math.sqrt(quad * mu_w / (2.0 * noise))
        for k in range(1, m + 1)
    ]
    radii = [radius / 2.0 ** ((k - 1) / rho) for k in range(1, m + 1)]
    schedule = MultistepSchedule(lengths, steps, radii)
    return _multi_run(
        problem, setup, schedule, seed, start,
        algorithm="msmd-ball", ball=True, trace_stride=trace_stride,
    )

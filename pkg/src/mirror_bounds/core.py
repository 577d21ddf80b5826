"""Shared domain types: constant sheets, oracle samples, feasible-set contract, run records.

Conventions used throughout the package:

* vectors are 1-D float64 numpy arrays, finite on every public boundary;
* set membership is checked with an absolute tolerance of 1e-9 on constraint
  residuals;
* a "draw" is the realized random vector itself (not hidden RNG state), so
  every oracle call is replayable.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace

import numpy as np

MEMBERSHIP_TOL = 1e-9


class ContractViolation(ValueError):
    """A caller broke an interface contract (dimension/shape/finiteness)."""


class DomainError(ValueError):
    """A query point lies outside the feasible set beyond tolerance."""


class ConfigError(ValueError):
    """Invalid solver/experiment configuration."""


class BudgetTooSmallError(ConfigError):
    """Oracle budget below the cost of a single multistep stage."""


class UnsupportedSetupError(TypeError):
    """Operation not available for this (set, proximal setup) pairing."""


class MethodMismatchError(ValueError):
    """A bound construction was applied to a run it is not valid for."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its guaranteed state."""


class ConvergenceError(RuntimeError):
    """A reference solver stalled before certifying its tolerance."""


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Validate and return ``x`` as a finite 1-D float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ContractViolation(f"{name} must be a 1-D vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise ContractViolation(f"{name} has dimension {v.size}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return v


def norm_value(v: np.ndarray, order: str) -> float:
    """Primal norm ('l1' or 'l2') of a vector."""
    if order == "l1":
        return float(np.sum(np.abs(v)))
    if order == "l2":
        return float(np.linalg.norm(v))
    raise ContractViolation(f"unknown norm tag {order!r}")


def dual_norm_value(v: np.ndarray, order: str) -> float:
    """Norm dual to the primal tag: linf for l1, l2 for l2."""
    if order == "l1":
        return float(np.max(np.abs(v)))
    if order == "l2":
        return float(np.linalg.norm(v))
    raise ContractViolation(f"unknown norm tag {order!r}")


@dataclass(frozen=True)
class ConstantSheet:
    """Analytic constants attached to a problem instance.

    Attributes
    ----------
    grad_bound : float
        Uniform bound on dual norms of exact subgradients over the set.
    value_noise : float
        Scale of oracle value deviations (second/exponential moment bound).
    grad_noise : float
        Scale of oracle subgradient deviations in the dual norm.
    set_radius : float
        Max distance from the designated start point, in the primal norm.
    grad_moment : float or None
        Exponential-moment scale for the full stochastic subgradient norm;
        used only by the comparison (aggregated-model) lower bound.
    growth_exponent, growth_modulus : float or None
        Uniform-convexity parameters (exponent >= 2, modulus > 0);
        present only when the objective is uniformly convex.
    """

    grad_bound: float
    value_noise: float
    grad_noise: float
    set_radius: float
    grad_moment: float | None = None
    growth_exponent: float | None = None
    growth_modulus: float | None = None

    def __post_init__(self):
        for name in ("grad_bound", "value_noise", "grad_noise", "set_radius"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"ConstantSheet.{name} must be > 0")
        if self.growth_exponent is not None:
            if self.growth_exponent < 2:
                raise ContractViolation("growth_exponent must be >= 2")
            if self.growth_modulus is None or not self.growth_modulus > 0:
                raise ContractViolation("growth_modulus must be > 0 when growth_exponent is set")

    def with_radius(self, set_radius: float) -> "ConstantSheet":
        return replace(self, set_radius=set_radius)

    @property
    def grad_moment_or_default(self) -> float:
        """Declared exponential-moment bound, or the always-valid fallback
        sqrt(2*(grad_bound^2 + grad_noise^2))."""
        if self.grad_moment is not None:
            return self.grad_moment
        return math.sqrt(2.0 * (self.grad_bound**2 + self.grad_noise**2))


@dataclass(frozen=True)
class OracleSample:
    """One stochastic oracle answer: value estimate and subgradient estimate."""

    value: float
    grad: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ContractViolation("oracle value is not finite")
        as_vector(self.grad, name="oracle grad")


class FeasibleSet(ABC):
    """Closed bounded convex set with the operations solvers and bounds need."""

    dimension: int
    has_projection: bool = True

    @abstractmethod
    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool: ...

    @abstractmethod
    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the set (exact for shipped families)."""

    @abstractmethod
    def lmo(self, c: np.ndarray) -> np.ndarray:
        """A minimizer of ``c @ x`` over the set."""

    @abstractmethod
    def start_point(self) -> np.ndarray:
        """Designated interior/start point."""

    @abstractmethod
    def vertices(self) -> np.ndarray:
        """All vertices, rows of an array (shipped sets are small polytopes)."""

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A random feasible point (for tests; distribution unspecified)."""

    def require_member(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        v = as_vector(x, dim=self.dimension)
        if not self.contains(v, tol):
            raise DomainError("point lies outside the feasible set beyond tolerance")
        return v

    def max_distance_from(self, x: np.ndarray, order: str = "l2") -> float:
        """max over the set of ||y - x|| in the given norm (exact: attained at a vertex)."""
        x = as_vector(x, dim=self.dimension)
        diffs = self.vertices() - x[None, :]
        if order == "l1":
            return float(np.max(np.sum(np.abs(diffs), axis=1)))
        if order == "l2":
            return float(np.max(np.linalg.norm(diffs, axis=1)))
        raise ContractViolation(f"unknown norm tag {order!r}")

    def diameter(self, order: str = "l2") -> float:
        verts = self.vertices()
        if order == "l1":
            d = np.sum(np.abs(verts[:, None, :] - verts[None, :, :]), axis=2)
        else:
            d = np.linalg.norm(verts[:, None, :] - verts[None, :, :], axis=2)
        return float(np.max(d))


class ProblemSpec(ABC):
    """A stochastic convex program: feasible set, stochastic oracle, constants.

    Concrete instances also expose exact objective evaluation (used by the
    reference solvers and the experiment harness) and reproducible sampling of
    the driving randomness.
    """

    family: str
    feasible_set: FeasibleSet
    norm: str  # primal norm tag: "l1" or "l2"
    sheet: ConstantSheet

    @abstractmethod
    def oracle(self, x: np.ndarray, xi: np.ndarray) -> OracleSample:
        """Unbiased value/subgradient pair at x for the realized draw xi."""

    @abstractmethod
    def exact_f(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def sample_xi(self, rng: np.random.Generator, size: int | None = None):
        """Draw one realization (or ``size`` stacked rows) of the randomness."""

    def exact_grad(self, x: np.ndarray) -> np.ndarray:
        raise UnsupportedSetupError(f"{self.family} has no smooth exact gradient")

    def support(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(atoms, weights) when the distribution is finite, else None."""
        return None

    def to_config(self) -> dict:
        raise NotImplementedError


def oracle_eval(problem: ProblemSpec, x: np.ndarray, draw) -> OracleSample:
    """Evaluate the problem's stochastic oracle at a feasible point.

    ``draw`` is the realized randomness (vector for the shipped families);
    the call is pure and replayable given (x, draw).
    """
    x = problem.feasible_set.require_member(x)
    return problem.oracle(x, draw)


def lmo(feasible_set: FeasibleSet, c: np.ndarray) -> np.ndarray:
    """Linear minimization oracle: argmin of c·x over the set."""
    c = as_vector(c, dim=feasible_set.dimension, name="c")
    return feasible_set.lmo(c)


@dataclass
class StageRecord:
    """Summary of one stage of a multistep run."""

    stage: int
    n_calls: int
    step: float
    radius: float | None
    start: np.ndarray
    solution: np.ndarray
    value_estimate: float


@dataclass
class RunRecord:
    """Trajectory summary of a solver run.

    ``values`` and ``steps`` always cover the averaging window that defines
    ``value_estimate`` (the whole run for single-stage algorithms, the last
    stage for multistep ones), so the weighted average is recomputable.
    """

    algorithm: str
    setup: str
    n_calls: int
    budget_used: int
    seed: int | None
    start: np.ndarray
    start_radius: float
    steps: np.ndarray
    values: np.ndarray
    solution: np.ndarray
    value_estimate: float
    step_rule: str  # "formula" | "override" | "stage"
    theta: float | None
    lin_grad_sum: np.ndarray
    lin_offset_sum: float
    duration: float
    stages: list[StageRecord] | None = None
    iterate_trace: list[tuple[int, np.ndarray]] = field(default_factory=list)
    value_trace: list[tuple[int, float, float]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def recomputed_estimate(self) -> float:
        total = float(np.sum(self.steps))
        return float(np.dot(self.steps, self.values) / total)

    def check_consistency(self, feasible_set: FeasibleSet | None = None) -> None:
        est = self.recomputed_estimate()
        scale = max(1.0, abs(self.value_estimate))
        if abs(est - self.value_estimate) > 1e-12 * scale:
            raise NumericalError("stored value estimate does not match its recomputation")
        if feasible_set is not None and not feasible_set.contains(self.solution):
            raise NumericalError("averaged solution left the feasible set")

    def to_jsonable(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "setup": self.setup,
            "n_calls": self.n_calls,
            "budget_used": self.budget_used,
            "seed": self.seed,
            "value_estimate": self.value_estimate,
            "solution": self.solution.tolist(),
            "start_radius": self.start_radius,
            "step_rule": self.step_rule,
            "theta": self.theta,
            "duration": self.duration,
            "stages": [
                {
                    "stage": s.stage,
                    "n_calls": s.n_calls,
                    "step": s.step,
                    "radius": s.radius,
                    "value_estimate": s.value_estimate,
                }
                for s in (self.stages or [])
            ],
            "notes": list(self.notes),
        }

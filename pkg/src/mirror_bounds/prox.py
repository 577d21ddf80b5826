"""Proximal setups (Euclidean, entropy, power-norm) and their prox mappings.

Each setup bundles a primal norm, a distance-generating function omega with
strong-convexity modulus, the omega-center and omega-radius of the feasible
set, and the induced Bregman prox mapping.  The entropy setup carries its
iterates in log-space end to end; conversion to the simplex happens only when
iterates are averaged or inspected.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .core import (
    ConfigError,
    DomainError,
    FeasibleSet,
    NumericalError,
    UnsupportedSetupError,
    as_vector,
    dual_norm_value,
    norm_value,
)
from .sets import FloorSimplex


class ProximalSetup(ABC):
    """Norm + distance-generating function + prox mapping over one set."""

    name: str
    norm: str  # primal norm tag
    strong_convexity: float  # modulus of omega w.r.t. the primal norm
    quad_growth: float | None  # quadratic-growth constant, None if unavailable
    feasible_set: FeasibleSet

    @abstractmethod
    def omega(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def omega_grad(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def prox(self, x: np.ndarray, zeta: np.ndarray) -> np.ndarray:
        """argmin_y omega(y) + y.(zeta - omega'(x)) over the feasible set."""

    @property
    @abstractmethod
    def center(self) -> np.ndarray:
        """The omega-center: minimizer of omega over the set."""

    @property
    @abstractmethod
    def omega_radius(self) -> float:
        """sqrt(2 (max omega - min omega)) over the set (upper bound where analytic)."""

    def bregman(self, x: np.ndarray, y: np.ndarray) -> float:
        return self.omega(y) - self.omega(x) - float(np.dot(y - x, self.omega_grad(x)))

    def primal_norm(self, v: np.ndarray) -> float:
        return norm_value(v, self.norm)

    def dual_norm(self, v: np.ndarray) -> float:
        return dual_norm_value(v, self.norm)

    # Solver-facing state interface; the default state is the primal point.
    def init_state(self, x: np.ndarray):
        return np.array(x, dtype=float)

    def step_state(self, state, zeta: np.ndarray):
        return self.prox(state, zeta)

    def primal(self, state) -> np.ndarray:
        return state


class EuclideanSetup(ProximalSetup):
    """omega = ||x||^2 / 2; prox is the Euclidean projection of x - zeta."""

    name = "euclidean"
    norm = "l2"
    strong_convexity = 1.0
    quad_growth = 1.0

    def __init__(self, feasible_set: FeasibleSet):
        self.feasible_set = feasible_set
        self._center = feasible_set.project(np.zeros(feasible_set.dimension))
        sq_max = float(np.max(np.sum(feasible_set.vertices() ** 2, axis=1)))
        sq_min = float(np.dot(self._center, self._center))
        self._radius = math.sqrt(max(sq_max - sq_min, 0.0))

    def omega(self, x):
        return 0.5 * float(np.dot(x, x))

    def omega_grad(self, x):
        return np.array(x, dtype=float)

    def prox(self, x, zeta):
        return self.feasible_set.project(x - zeta)

    @property
    def center(self):
        return self._center.copy()

    @property
    def omega_radius(self):
        return self._radius


class EntropySetup(ProximalSetup):
    """Negative entropy on the standard simplex; iterates carried in log-space."""

    name = "entropy"
    norm = "l1"
    strong_convexity = 1.0
    quad_growth = None  # second derivative of the entropy blows up at the boundary

    def __init__(self, feasible_set: FloorSimplex):
        if not isinstance(feasible_set, FloorSimplex) or feasible_set.floor != 0.0 or feasible_set.total != 1.0:
            raise UnsupportedSetupError("entropy setup requires the standard simplex (total=1, floor=0)")
        if feasible_set.dimension < 2:
            raise UnsupportedSetupError("entropy setup needs dimension >= 2")
        self.feasible_set = feasible_set
        self._n = feasible_set.dimension

    def omega(self, x):
        x = np.asarray(x, dtype=float)
        pos = x > 0
        return float(np.sum(x[pos] * np.log(x[pos])))

    def omega_grad(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("entropy gradient needs a strictly positive point")
        return 1.0 + np.log(x)

    def prox(self, x, zeta):
        return np.exp(self.step_state(self.init_state(x), zeta))

    @property
    def center(self):
        return np.full(self._n, 1.0 / self._n)

    @property
    def omega_radius(self):
        return math.sqrt(2.0 * math.log(self._n))

    # log-space state
    def init_state(self, x):
        x = as_vector(x, dim=self._n)
        if np.any(x <= 0):
            raise DomainError("entropy iterates must start strictly inside the simplex")
        z = np.log(x)
        if abs(float(np.sum(np.exp(z))) - 1.0) > 1e-9:
            raise DomainError("entropy start point must lie on the unit simplex")
        return z

    def step_state(self, state, zeta):
        w = state - zeta
        w = w - np.max(w)
        return w - math.log(float(np.sum(np.exp(w))))

    def primal(self, state):
        return np.exp(state)


class PNormSetup(ProximalSetup):
    """omega(x) = sum |x_i|^p / (p g) with p = 1 + 1/ln n, g = 1/(e ln n).

    Defined on a floor simplex with strictly positive floor so quadratic
    growth holds.  The prox reduces to a monotone scalar root-find, solved by
    bisection (derivative-free; robust at the floor kinks).
    """

    name = "pnorm"
    norm = "l1"

    def __init__(self, feasible_set: FloorSimplex):
        if not isinstance(feasible_set, FloorSimplex):
            raise UnsupportedSetupError("power-norm setup requires a floor simplex")
        if feasible_set.floor <= 0.0:
            raise UnsupportedSetupError("power-norm setup requires a strictly positive floor")
        n = feasible_set.dimension
        if n < 2:
            raise UnsupportedSetupError("power-norm setup needs dimension >= 2")
        self.feasible_set = feasible_set
        a, b = feasible_set.total, feasible_set.floor
        self.p = 1.0 + 1.0 / math.log(n)
        self.gamma_coef = 1.0 / (math.e * math.log(n))
        self.strong_convexity = math.e / (n * a ** (2.0 - self.p))
        self.quad_growth = math.e / b ** (1.0 - 1.0 / math.log(n))
        self._radius = math.sqrt(
            (2.0 * a**self.p / (self.p * self.gamma_coef)) * (1.0 - n ** (-1.0 / math.log(n)))
        )

    def omega(self, x):
        return float(np.sum(np.abs(x) ** self.p)) / (self.p * self.gamma_coef)

    def omega_grad(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.abs(x) ** (self.p - 1.0) / self.gamma_coef

    def prox(self, x, zeta):
        x_plus, _ = self.prox_with_multiplier(x, zeta)
        return x_plus

    def prox_with_multiplier(self, x, zeta) -> tuple[np.ndarray, float]:
        """Prox step plus the scalar multiplier from the stationarity system."""
        a, b = self.feasible_set.total, self.feasible_set.floor
        p, g = self.p, self.gamma_coef
        z = np.asarray(zeta, dtype=float) - self.omega_grad(x)
        b_pow = b ** (p - 1.0)
        inv = 1.0 / (p - 1.0)

        def point(nu):
            t = g * (nu - z)
            return np.where(t > b_pow, np.maximum(t, 0.0) ** inv, b)

        lo = float(np.min(z))  # all coordinates at the floor: sum = n b < a
        hi = float(np.max(z)) + a ** (p - 1.0) / g  # top coordinate reaches a: sum >= a
        f_lo = float(np.sum(point(lo))) - a
        f_hi = float(np.sum(point(hi))) - a
        if f_lo > 0 or f_hi < 0:
            raise NumericalError(f"prox bisection bracket failed: h({lo})={f_lo}, h({hi})={f_hi}")
        nu = 0.5 * (lo + hi)
        for _ in range(200):
            nu = 0.5 * (lo + hi)
            h = float(np.sum(point(nu))) - a
            if abs(h) <= 1e-12 * max(1.0, a):
                break
            if h > 0:
                hi = nu
            else:
                lo = nu
        x_plus = point(nu)
        if abs(float(np.sum(x_plus)) - a) > 1e-10:
            raise NumericalError("prox bisection did not reach the mass constraint")
        return x_plus, nu

    def kkt_residual(self, x, zeta, x_plus, nu) -> float:
        """Max violation of stationarity/complementarity for the prox subproblem."""
        b = self.feasible_set.floor
        z = np.asarray(zeta, dtype=float) - self.omega_grad(x)
        station = self.omega_grad(x_plus) + z - nu
        free = x_plus > b + 1e-12
        res = 0.0
        if np.any(free):
            res = float(np.max(np.abs(station[free])))
        if np.any(~free):
            # at the floor the multiplier must be nonnegative: omega' + z - nu >= 0
            res = max(res, float(np.max(np.maximum(-station[~free], 0.0))))
        return res

    @property
    def center(self):
        return self.feasible_set.start_point()

    @property
    def omega_radius(self):
        return self._radius


def prox_euclidean(x: np.ndarray, zeta: np.ndarray, feasible_set: FeasibleSet) -> np.ndarray:
    """Euclidean prox step: project x - zeta back onto the set."""
    return feasible_set.project(as_vector(x, dim=feasible_set.dimension) - as_vector(zeta, dim=feasible_set.dimension))


def prox_entropy(log_x: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Entropy prox step in log-space, stabilized by the max-shift identity.

    Input and output satisfy sum(exp(z)) = 1; the shift makes the exponentials
    safe for arbitrarily large step vectors.
    """
    z = as_vector(log_x, name="log_x")
    zeta = as_vector(zeta, dim=z.size, name="zeta")
    if abs(float(np.sum(np.exp(z))) - 1.0) > 1e-9:
        raise DomainError("log_x must represent a point on the unit simplex")
    w = z - zeta
    w = w - np.max(w)
    return w - math.log(float(np.sum(np.exp(w))))


def prox_pnorm(x: np.ndarray, zeta: np.ndarray, feasible_set: FloorSimplex) -> np.ndarray:
    """Power-norm prox step on a floor simplex (scalar bisection inside)."""
    return PNormSetup(feasible_set).prox(x, zeta)


def dykstra(point: np.ndarray, project_a, project_b, tol: float = 1e-10, max_sweeps: int = 10_000) -> np.ndarray:
    """Dykstra alternating projections onto the intersection of two convex sets.

    Returns a point of set A (the last projection applied) within ``tol`` of
    set B.  Plain alternating projections would converge to a point of the
    intersection but not to the projection; Dykstra's correction terms do.
    """
    x = np.array(point, dtype=float)
    inc_a = np.zeros_like(x)
    inc_b = np.zeros_like(x)
    prev = x.copy()
    for sweep in range(max_sweeps):
        y = project_b(x + inc_b)
        inc_b = x + inc_b - y
        x = project_a(y + inc_a)
        inc_a = y + inc_a - x
        if sweep > 0 and float(np.max(np.abs(x - prev))) < tol:
            return x
        prev = x.copy()
    return x


def prox_ball_restricted(
    setup: ProximalSetup,
    ball_center: np.ndarray,
    radius: float,
    x: np.ndarray,
    zeta: np.ndarray,
) -> np.ndarray:
    """Euclidean prox step restricted to (feasible set) intersect B(center, radius)."""
    if not isinstance(setup, EuclideanSetup):
        raise UnsupportedSetupError("ball-restricted prox is supported for the Euclidean setup only")
    if radius <= 0:
        raise ConfigError("ball radius must be positive")
    fs = setup.feasible_set
    c = as_vector(ball_center, dim=fs.dimension, name="ball_center")
    target = as_vector(x, dim=fs.dimension) - as_vector(zeta, dim=fs.dimension)

    def project_ball(v):
        d = v - c
        r = float(np.linalg.norm(d))
        return v if r <= radius else c + d * (radius / r)

    return dykstra(target, fs.project, project_ball)


def setup_constants(setup: ProximalSetup) -> tuple[np.ndarray, float, float, float | None]:
    """(center, omega-radius, strong-convexity modulus, quadratic-growth constant)."""
    return setup.center, setup.omega_radius, setup.strong_convexity, setup.quad_growth


def make_setup(name: str, feasible_set: FeasibleSet) -> ProximalSetup:
    """Factory for the shipped proximal setups."""
    if name == "euclidean":
        return EuclideanSetup(feasible_set)
    if name == "entropy":
        if not isinstance(feasible_set, FloorSimplex):
            raise UnsupportedSetupError("entropy setup requires a simplex set")
        return EntropySetup(feasible_set)
    if name == "pnorm":
        if not isinstance(feasible_set, FloorSimplex):
            raise UnsupportedSetupError("power-norm setup requires a floor simplex")
        return PNormSetup(feasible_set)
    raise ConfigError(f"unknown proximal setup {name!r}")

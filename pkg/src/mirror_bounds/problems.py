"""Benchmark problem families, their analytic constant sheets, and reference solvers.

Two families ship:

* a quadratic stochastic program over a (floor) simplex driven by independent
  signed Bernoulli coordinates, with closed-form objective through the mean
  vector and second-moment matrix;
* a mean/CVaR portfolio program over a box x simplex lifted set, whose "true"
  distribution is a finite scenario pool (the pool is the distribution, so
  exact objective values are full-pool passes).

Reference solvers produce certified optima: an accelerated projected-gradient
loop with an exact linearization-gap certificate for the smooth family, and
an exact scenario LP (or a stabilized cutting-plane loop when a quadratic
regularizer is present) for the CVaR family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .core import (
    ConfigError,
    ConstantSheet,
    ConvergenceError,
    ContractViolation,
    OracleSample,
    ProblemSpec,
    as_vector,
)
from .sets import BoxSimplex, FloorSimplex


def lambda_min_rank1_diag(mu: np.ndarray, max_iter: int = 20_000, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of V = mu mu^T + diag(1 - mu_i^2).

    Power iteration on the spectrally shifted matrix s*I - V using the O(n)
    structured matvec; falls back to a dense eigensolve if the iteration
    stalls (near-degenerate spectrum).
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    s = 1.0 + float(mu @ mu) + 1e-3  # strict upper bound on lambda_max(V)
    diag = 1.0 - mu * mu

    def shifted(v):
        return s * v - (mu * (mu @ v) + diag * v)

    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = shifted(v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return s
        v_new = w / lam
        if float(np.linalg.norm(shifted(v_new) - lam * v_new)) <= tol * s:
            return s - float(v_new @ shifted(v_new))
        v = v_new
    vmat = np.outer(mu, mu) + np.diag(diag)
    return float(np.linalg.eigvalsh(vmat)[0])


class QuadraticSimplexProblem(ProblemSpec):
    """E[a0 xi.x + (a1/2)((xi.x)^2 + lam0 ||x||^2)] over a floor simplex.

    xi has independent +-1 coordinates with P(xi_i = 1) = psi_i, so the exact
    objective is a0 mu.x + (a1/2)(x.Vx + lam0 ||x||^2) with mu = 2 psi - 1 and
    V = mu mu^T + diag(1 - mu_i^2).
    """

    family = "instance1"

    def __init__(self, n, alpha0, alpha1, lam0, total, floor, norm, seed, psi):
        if alpha1 < 0 or (alpha1 == 0 and alpha0 == 0):
            raise ConfigError("need alpha1 >= 0 and not both weights zero")
        if lam0 < 0 or floor < 0:
            raise ConfigError("lam0 and floor must be nonnegative")
        if norm not in ("l1", "l2"):
            raise ConfigError("norm must be 'l1' or 'l2'")
        self.n = int(n)
        self.alpha0 = float(alpha0)
        self.alpha1 = float(alpha1)
        self.lam0 = float(lam0)
        self.norm = norm
        self.seed = seed
        self.psi = as_vector(psi, dim=self.n, name="psi")
        if np.any(self.psi < 0) or np.any(self.psi > 1):
            raise ConfigError("psi entries must lie in [0, 1]")
        self.feasible_set = FloorSimplex(self.n, total=total, floor=floor)
        self.mu = 2.0 * self.psi - 1.0
        self._vdiag = 1.0 - self.mu**2
        self.sheet = self._build_sheet()

    # V x with V = mu mu^T + diag(1 - mu^2), O(n)
    def v_matvec(self, x: np.ndarray) -> np.ndarray:
        return self.mu * float(self.mu @ x) + self._vdiag * x

    def lambda_min(self) -> float:
        return lambda_min_rank1_diag(self.mu)

    def grad_lipschitz(self) -> float:
        # floor keeps steps at the linear-term scale when the quadratic vanishes
        quad = self.alpha1 * (1.0 + float(self.mu @ self.mu) + self.lam0)
        return max(quad, abs(self.alpha0), 1e-9)

    def _build_sheet(self) -> ConstantSheet:
        a0, a1, lam0 = abs(self.alpha0), self.alpha1, self.lam0
        if self.feasible_set.total != 1.0:
            raise ConfigError("constant sheets are derived for unit total mass only")
        n = self.n
        growth_exp = growth_mod = None
        if lam0 > 0:
            growth_exp = 2.0
            lmin = self.lambda_min()
            growth_mod = a1 * (lmin + lam0) / (n if self.norm == "l1" else 1.0)
        if self.norm == "l1":
            grad_bound = a0 + a1 * (1.0 + lam0)
            value_noise = 2.0 * a0 + 0.5 * a1
            grad_noise = 2.0 * a0 + a1
            grad_moment = a0 + a1 * (1.0 + lam0)
        else:
            rn = math.sqrt(n)
            grad_bound = a0 * rn + a1 * (1.0 + lam0) * rn
            value_noise = 2.0 * a0 + 0.5 * a1
            grad_noise = 2.0 * a0 * rn + 2.0 * a1 * rn
            grad_moment = None
        radius = self.feasible_set.max_distance_from(self.feasible_set.start_point(), self.norm)
        return ConstantSheet(
            grad_bound=grad_bound,
            value_noise=value_noise,
            grad_noise=grad_noise,
            set_radius=radius,
            grad_moment=grad_moment,
            growth_exponent=growth_exp,
            growth_modulus=growth_mod,
        )

    def oracle(self, x, xi):
        xi = as_vector(xi, dim=self.n, name="xi")
        z = float(xi @ x)
        sq = self.lam0 * float(x @ x)
        value = self.alpha0 * z + 0.5 * self.alpha1 * (z * z + sq)
        grad = self.alpha0 * xi + self.alpha1 * (z * xi + self.lam0 * x)
        return OracleSample(value, grad)

    def exact_f(self, x):
        x = np.asarray(x, dtype=float)
        quad = float(x @ self.v_matvec(x)) + self.lam0 * float(x @ x)
        return self.alpha0 * float(self.mu @ x) + 0.5 * self.alpha1 * quad

    def exact_grad(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha0 * self.mu + self.alpha1 * (self.v_matvec(x) + self.lam0 * x)

    def sample_xi(self, rng, size=None):
        shape = (self.n,) if size is None else (size, self.n)
        return np.where(rng.random(shape) < self.psi, 1.0, -1.0)

    def support(self):
        if self.n > 12:
            return None
        grid = np.array(
            [[1.0 if (k >> i) & 1 else -1.0 for i in range(self.n)] for k in range(2**self.n)]
        )
        p_up = np.where(grid > 0, self.psi, 1.0 - self.psi)
        return grid, np.prod(p_up, axis=1)

    def to_config(self):
        return {
            "family": self.family,
            "n": self.n,
            "alpha0": self.alpha0,
            "alpha1": self.alpha1,
            "lam0": self.lam0,
            "total": self.feasible_set.total,
            "floor": self.feasible_set.floor,
            "norm": self.norm,
            "seed": self.seed,
        }


class CvarPortfolioProblem(ProblemSpec):
    """a0 E[xi.x] + a1 (x0 + E[(xi.x - x0)^+]/eps) + lam0 ||(x0, x)||^2.

    The lifted variable is (x0, portfolio); the distribution of xi is a finite
    scenario pool sampled uniformly, which also defines the exact objective.
    At the plus-part kink the subgradient takes the zero-slope selection
    (the derivative of t -> max(t, 0) is taken to be 0 at t = 0).
    """

    family = "instance2"

    def __init__(self, n, alpha0, alpha1, eps, lam0, pool_size, seed, pool, x0_bound=1.0):
        if not 0 < eps < 1:
            raise ConfigError("eps must lie in (0, 1)")
        if alpha0 < 0 or alpha1 < 0:
            raise ConfigError("alpha0 and alpha1 must be nonnegative")
        if lam0 < 0:
            raise ConfigError("lam0 must be nonnegative")
        self.n = int(n)
        self.alpha0 = float(alpha0)
        self.alpha1 = float(alpha1)
        self.eps = float(eps)
        self.lam0 = float(lam0)
        self.seed = seed
        self.pool = np.asarray(pool, dtype=float)
        if self.pool.shape != (pool_size, self.n):
            raise ContractViolation("pool shape mismatch")
        if np.max(np.abs(self.pool)) > 1.0 + 1e-12:
            raise ContractViolation("pool entries must lie in [-1, 1]")
        self.norm = "l2"
        self.feasible_set = BoxSimplex(self.n, bound=x0_bound)
        self.sheet = self._build_sheet()

    def _build_sheet(self):
        a0, a1, eps, lam0, n = self.alpha0, self.alpha1, self.eps, self.lam0, self.n
        radical = math.sqrt(a1**2 * (1.0 - 1.0 / eps) ** 2 + n * (a0 + a1 / eps) ** 2)
        radius = self.feasible_set.max_distance_from(self.feasible_set.start_point(), "l2")
        return ConstantSheet(
            grad_bound=radical + 2.0 * lam0,
            value_noise=2.0 * (a0 + a1 / eps),
            grad_noise=math.sqrt((a1 / eps) ** 2 + 4.0 * n * (a0 + a1 / eps) ** 2),
            set_radius=radius,
            grad_moment=radical,
            growth_exponent=2.0 if lam0 > 0 else None,
            growth_modulus=2.0 * lam0 if lam0 > 0 else None,
        )

    def oracle(self, x, xi):
        xi = as_vector(xi, dim=self.n, name="xi")
        x0, xp = float(x[0]), x[1:]
        z = float(xi @ xp)
        slack = z - x0
        ind = 1.0 if slack > 0 else 0.0
        value = self.alpha0 * z + self.alpha1 * (x0 + ind * slack / self.eps) + self.lam0 * float(x @ x)
        g0 = self.alpha1 * (1.0 - ind / self.eps) + 2.0 * self.lam0 * x0
        gp = (self.alpha0 + self.alpha1 * ind / self.eps) * xi + 2.0 * self.lam0 * xp
        return OracleSample(value, np.concatenate(([g0], gp)))

    def exact_f(self, x):
        x = np.asarray(x, dtype=float)
        x0, xp = float(x[0]), x[1:]
        z = self.pool @ xp
        tail = np.mean(np.maximum(z - x0, 0.0))
        return (
            self.alpha0 * float(np.mean(z))
            + self.alpha1 * (x0 + tail / self.eps)
            + self.lam0 * float(x @ x)
        )

    def exact_subgrad(self, x):
        """Full-pool subgradient with the zero-slope kink selection."""
        x = np.asarray(x, dtype=float)
        x0, xp = float(x[0]), x[1:]
        z = self.pool @ xp
        ind = (z > x0).astype(float)
        g0 = self.alpha1 * (1.0 - float(np.mean(ind)) / self.eps) + 2.0 * self.lam0 * x0
        gp = (
            self.alpha0 * np.mean(self.pool, axis=0)
            + (self.alpha1 / self.eps) * (self.pool.T @ ind) / len(self.pool)
            + 2.0 * self.lam0 * xp
        )
        return np.concatenate(([g0], gp))

    def sample_xi(self, rng, size=None):
        idx = rng.integers(0, len(self.pool), size=size)
        return self.pool[idx]

    def support(self):
        p = len(self.pool)
        return self.pool, np.full(p, 1.0 / p)

    def cvar_sorted(self, losses: np.ndarray) -> float:
        """Empirical CVaR of equally weighted losses via the sorted-tail formula."""
        v = np.sort(np.asarray(losses, dtype=float))[::-1]
        p = v.size
        mass = self.eps * p
        m = int(math.floor(mass))
        out = float(np.sum(v[:m]))
        if m < p and mass > m:
            out += (mass - m) * v[m]
        return out / mass

    def cvar_min_form(self, losses: np.ndarray) -> float:
        """Empirical CVaR via min over the scalar threshold (kinks at the atoms)."""
        v = np.sort(np.asarray(losses, dtype=float))
        p = v.size
        # phi(c) = c + mean((v - c)^+)/eps is convex piecewise linear with
        # kinks exactly at the atoms, so its minimum sits on one of them
        tail_sums = np.cumsum(v[::-1])[::-1]
        counts = p - np.arange(p)
        phi = v + (tail_sums - counts * v) / (self.eps * p)
        return float(np.min(phi))

    def to_config(self):
        return {
            "family": self.family,
            "n": self.n,
            "alpha0": self.alpha0,
            "alpha1": self.alpha1,
            "eps": self.eps,
            "lam0": self.lam0,
            "pool_size": len(self.pool),
            "seed": self.seed,
            "x0_bound": self.feasible_set.bound,
        }


class LinearLossProblem(ProblemSpec):
    """E[xi.x] over a floor simplex with a finite scenario pool.

    Serves as the inner cost of risk-measure reformulations; constants are
    safe closed-form bounds for pools inside the unit box.
    """

    family = "linear_loss"

    def __init__(self, n, pool, seed):
        self.n = int(n)
        self.pool = np.asarray(pool, dtype=float)
        self.seed = seed
        self.norm = "l2"
        self.feasible_set = FloorSimplex(self.n)
        rn = math.sqrt(self.n)
        self.sheet = ConstantSheet(
            grad_bound=rn,
            value_noise=2.0,
            grad_noise=2.0 * rn,
            set_radius=self.feasible_set.max_distance_from(self.feasible_set.start_point(), "l2"),
            grad_moment=rn,
        )
        self._mean = np.mean(self.pool, axis=0)

    def oracle(self, x, xi):
        xi = as_vector(xi, dim=self.n, name="xi")
        return OracleSample(float(xi @ x), np.array(xi))

    def exact_f(self, x):
        return float(self._mean @ x)

    def exact_grad(self, x):
        return self._mean.copy()

    def sample_xi(self, rng, size=None):
        idx = rng.integers(0, len(self.pool), size=size)
        return self.pool[idx]

    def support(self):
        p = len(self.pool)
        return self.pool, np.full(p, 1.0 / p)

    def to_config(self):
        return {"family": self.family, "n": self.n, "pool_size": len(self.pool), "seed": self.seed}


def gen_instance1(
    n: int,
    alpha0: float,
    alpha1: float,
    lam0: float = 0.0,
    total: float = 1.0,
    floor: float = 0.0,
    norm: str = "l1",
    seed: int = 0,
) -> QuadraticSimplexProblem:
    """Quadratic simplex instance with success probabilities drawn U[0,1] from seed."""
    if not floor < total / n:
        raise ConfigError("floor must be < total/n for a nonempty interior")
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, 1.0, size=n)
    return QuadraticSimplexProblem(n, alpha0, alpha1, lam0, total, floor, norm, seed, psi)


def gen_instance2(
    n: int,
    alpha0: float,
    alpha1: float,
    eps: float,
    lam0: float = 0.0,
    pool_size: int = 10_000,
    seed: int = 0,
    x0_bound: float = 1.0,
) -> CvarPortfolioProblem:
    """Mean/CVaR instance over a fresh uniform scenario pool in the unit box."""
    if pool_size < 1000:
        raise ConfigError("pool_size must be at least 1000")
    rng = np.random.default_rng(seed)
    pool = rng.uniform(-1.0, 1.0, size=(pool_size, n))
    return CvarPortfolioProblem(n, alpha0, alpha1, eps, lam0, pool_size, seed, pool, x0_bound)


def gen_linear_loss(n: int, pool_size: int = 2000, seed: int = 0, pool=None) -> LinearLossProblem:
    if pool is None:
        rng = np.random.default_rng(seed)
        pool = rng.uniform(-1.0, 1.0, size=(pool_size, n))
    return LinearLossProblem(n, pool, seed)


def problem_from_config(cfg: dict) -> ProblemSpec:
    """Recreate an instance from its serialized parameters (pools are reseeded)."""
    cfg = dict(cfg)
    family = cfg.pop("family")
    if family == "instance1":
        return gen_instance1(**cfg)
    if family == "instance2":
        return gen_instance2(**cfg)
    if family == "linear_loss":
        return gen_linear_loss(cfg["n"], cfg["pool_size"], cfg["seed"])
    raise ConfigError(f"unknown problem family {family!r}")


@dataclass
class OptimumResult:
    x: np.ndarray
    value: float
    gap: float
    method: str
    iterations: int


@dataclass
class SaaResult:
    x: np.ndarray
    value: float
    sigma: float
    gap: float
    n: int


def _fista_gap_certified(f, grad, feasible_set, lip, tol, max_iter=500_000) -> OptimumResult:
    """Accelerated projected gradient with adaptive restarts.

    Stops when the exact linearization gap max_v grad(x).(x - v) over the set
    falls below tol; that gap upper-bounds f(x) - f*.
    """
    x_prev = feasible_set.start_point()
    y = x_prev.copy()
    t = 1.0
    step = 1.0 / lip
    for k in range(max_iter):
        g = grad(y)
        x = feasible_set.project(y - step * g)
        gx = grad(x)
        gap = float(gx @ (x - feasible_set.lmo(gx)))
        if gap <= tol:
            return OptimumResult(x, f(x), gap, "accelerated-projected-gradient", k + 1)
        if float((y - x) @ (x - x_prev)) > 0:  # momentum restart
            t = 1.0
            y = x
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
        x_prev = x
    raise ConvergenceError(f"gap stagnation: last certified gap {gap:.3e} > tol {tol:.3e}")


def _cvar_scenario_lp(atoms, alpha0, alpha1, eps, feasible_set: BoxSimplex) -> tuple[np.ndarray, float]:
    """Exact epigraph LP for the unregularized mean/CVaR objective on a finite pool."""
    z = np.asarray(atoms, dtype=float)
    p, n = z.shape
    # variables: x0, xp (n), u (p)
    c = np.concatenate(([alpha1], alpha0 * np.mean(z, axis=0), np.full(p, alpha1 / (eps * p))))
    a_ub = sp.hstack(
        [sp.csr_matrix(-np.ones((p, 1))), sp.csr_matrix(z), -sp.eye(p, format="csr")], format="csr"
    )
    b_ub = np.zeros(p)
    a_eq = sp.hstack(
        [sp.csr_matrix((1, 1)), sp.csr_matrix(np.ones((1, n))), sp.csr_matrix((1, p))], format="csr"
    )
    b_eq = np.array([feasible_set.simplex.total])
    bounds = (
        [(-feasible_set.bound, feasible_set.bound)]
        + [(feasible_set.simplex.floor, None)] * n
        + [(0, None)] * p
    )
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise ConvergenceError(f"scenario LP failed: {res.message}")
    return np.array(res.x[: n + 1]), float(res.fun)


def _cutting_plane(f, subgrad, feasible_set: BoxSimplex, tol, max_iter=600) -> OptimumResult:
    """Stabilized cutting-plane loop with an exact model lower bound.

    The model LP (over the accumulated subgradient cuts) is a valid minorant
    of f, so best-value-minus-model-minimum certifies the returned gap.
    """
    n = feasible_set.dimension
    x = feasible_set.start_point()
    cuts_f, cuts_s, cuts_x = [], [], []
    best_x, best_f = x.copy(), f(x)
    lb = -math.inf
    fs = feasible_set
    bounds = (
        [(-fs.bound, fs.bound)]
        + [(fs.simplex.floor, None)] * fs.simplex.dimension
        + [(None, None)]  # epigraph variable
    )
    # simplex part occupies coordinates 1..n-1 of the lifted vector of length n
    a_eq = np.zeros((1, n + 1))
    a_eq[0, 1:n] = 1.0
    b_eq = np.array([fs.simplex.total])
    for k in range(max_iter):
        fx = f(x)
        sx = subgrad(x)
        cuts_f.append(fx)
        cuts_s.append(sx)
        cuts_x.append(x.copy())
        if fx < best_f:
            best_f, best_x = fx, x.copy()
        # model LP: min t subject to t >= f_i + s_i.(y - x_i), y feasible
        m = len(cuts_f)
        a_ub = np.zeros((m, n + 1))
        b_ub = np.zeros(m)
        for i in range(m):
            a_ub[i, :n] = cuts_s[i]
            a_ub[i, n] = -1.0
            b_ub[i] = float(cuts_s[i] @ cuts_x[i]) - cuts_f[i]
        cost = np.zeros(n + 1)
        cost[n] = 1.0
        res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if not res.success:
            raise ConvergenceError(f"cutting-plane model LP failed: {res.message}")
        lb = max(lb, float(res.fun))
        if best_f - lb <= tol:
            return OptimumResult(best_x, best_f, best_f - lb, "cutting-plane", k + 1)
        x = fs.project(0.5 * np.asarray(res.x[:n]) + 0.5 * best_x)
    raise ConvergenceError(f"cutting-plane stalled: gap {best_f - lb:.3e} > tol {tol:.3e}")


def _minimize_cvar_family(atoms, alpha0, alpha1, eps, lam0, feasible_set, tol) -> OptimumResult:
    if lam0 == 0.0:
        x, val = _cvar_scenario_lp(atoms, alpha0, alpha1, eps, feasible_set)
        # re-evaluate with our own full-pool pass; the difference plus the
        # solver's optimality is the recorded certificate
        z = atoms @ x[1:]
        ours = alpha0 * float(np.mean(z)) + alpha1 * (x[0] + float(np.mean(np.maximum(z - x[0], 0.0))) / eps)
        gap = abs(ours - val) + 1e-9 * (1.0 + abs(val))
        return OptimumResult(x, ours, gap, "scenario-lp", 1)

    pool = np.asarray(atoms, dtype=float)

    def f(x):
        z = pool @ x[1:]
        return (
            alpha0 * float(np.mean(z))
            + alpha1 * (x[0] + float(np.mean(np.maximum(z - x[0], 0.0))) / eps)
            + lam0 * float(x @ x)
        )

    def subgrad(x):
        z = pool @ x[1:]
        ind = (z > x[0]).astype(float)
        g0 = alpha1 * (1.0 - float(np.mean(ind)) / eps) + 2.0 * lam0 * x[0]
        gp = alpha0 * np.mean(pool, axis=0) + (alpha1 / eps) * (pool.T @ ind) / len(pool) + 2.0 * lam0 * x[1:]
        return np.concatenate(([g0], gp))

    return _cutting_plane(f, subgrad, feasible_set, tol)


def exact_optimum(problem: ProblemSpec, tol: float | None = None) -> OptimumResult:
    """Deterministic reference optimum with a recorded optimality certificate."""
    if isinstance(problem, QuadraticSimplexProblem):
        tol = 1e-8 if tol is None else tol
        return _fista_gap_certified(
            problem.exact_f, problem.exact_grad, problem.feasible_set, problem.grad_lipschitz(), tol
        )
    if isinstance(problem, CvarPortfolioProblem):
        tol = 1e-6 if tol is None else tol
        return _minimize_cvar_family(
            problem.pool, problem.alpha0, problem.alpha1, problem.eps, problem.lam0, problem.feasible_set, tol
        )
    if isinstance(problem, LinearLossProblem):
        g = problem.exact_grad(problem.feasible_set.start_point())
        x = problem.feasible_set.lmo(g)
        return OptimumResult(x, problem.exact_f(x), 0.0, "lmo", 1)
    raise ConfigError(f"no reference solver for family {problem.family!r}")


def saa_solve(problem: ProblemSpec, sample: np.ndarray, tol: float | None = None) -> SaaResult:
    """Solve the sample-average counterpart on the given draws.

    Returns the empirical optimal value, its minimizer, and the plug-in
    standard deviation of the oracle values at that minimizer.
    """
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[1] != getattr(problem, "n", sample.shape[1]):
        raise ContractViolation("sample must be an (N, n) array of draws")
    n_draws = len(sample)
    if isinstance(problem, QuadraticSimplexProblem):
        tol = 1e-8 if tol is None else tol
        a0, a1, lam0 = problem.alpha0, problem.alpha1, problem.lam0
        mu_hat = np.mean(sample, axis=0)
        v_hat = sample.T @ sample / n_draws

        def f(x):
            return a0 * float(mu_hat @ x) + 0.5 * a1 * (float(x @ (v_hat @ x)) + lam0 * float(x @ x))

        def grad(x):
            return a0 * mu_hat + a1 * (v_hat @ x + lam0 * x)

        lam_max = float(np.linalg.norm(v_hat, 2))
        res = _fista_gap_certified(f, grad, problem.feasible_set, a1 * (lam_max + lam0) * 1.01, tol)
        z = sample @ res.x
        values = a0 * z + 0.5 * a1 * (z * z + lam0 * float(res.x @ res.x))
    elif isinstance(problem, CvarPortfolioProblem):
        tol = 1e-6 if tol is None else tol
        res = _minimize_cvar_family(
            sample, problem.alpha0, problem.alpha1, problem.eps, problem.lam0, problem.feasible_set, tol
        )
        x0, xp = float(res.x[0]), res.x[1:]
        z = sample @ xp
        values = (
            problem.alpha0 * z
            + problem.alpha1 * (x0 + np.maximum(z - x0, 0.0) / problem.eps)
            + problem.lam0 * float(res.x @ res.x)
        )
        res = OptimumResult(res.x, float(np.mean(values)), res.gap, res.method, res.iterations)
    else:
        raise ConfigError(f"no SAA solver for family {problem.family!r}")
    sigma = float(np.sqrt(np.mean((values - res.value) ** 2)))
    return SaaResult(res.x, res.value, sigma, res.gap, n_draws)

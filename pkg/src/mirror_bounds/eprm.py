"""Two-stage polyhedral risk measures and their risk-neutral reformulation.

A risk measure here is the optimal value of a two-stage linear program in
which the random outcome enters the second-stage right-hand side affinely.
The module provides:

* a dense two-phase revised simplex solver (Bland's rule) returning primal
  and dual certificates;
* model construction/validation (recourse completeness, dual nonemptiness and
  boundedness, monotonicity direction), with the dual polytope's vertices
  enumerated once so every oracle call can take the exact dual maximizer with
  a deterministic tie-break;
* evaluation of the risk of an empirical distribution by a certified
  subgradient loop over the first-stage variable;
* reformulation of "risk of an inner random cost over a simplex" into a
  risk-neutral problem on a lifted box x simplex set, whose oracle solves the
  second stage and stacks the chain-rule subgradient.

Tie-breaking: when several dual vertices are optimal (second-stage kinks) the
one with the smallest first-block l1 norm is taken (then lexicographic), which
matches the zero-slope subgradient selection of the closed-form oracles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    ConstantSheet,
    ContractViolation,
    ConvergenceError,
    NumericalError,
    OracleSample,
    ProblemSpec,
    UnsupportedSetupError,
    as_vector,
)
from .sets import BoxSimplex, FloorSimplex

@dataclass
class LpSolution:
    """Primal/dual answer for min c.y s.t. A_ub y <= b_ub, A_eq y = b_eq.

    Dual convention: value = dual_eq . b_eq + dual_ineq . b_ub with
    A_eq^T dual_eq + A_ub^T dual_ineq = c and dual_ineq <= 0.
    """

    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    value: float | None = None
    dual_ineq: np.ndarray | None = None
    dual_eq: np.ndarray | None = None

    def duality_gap(self, b_ub, b_eq) -> float:
        dual_val = 0.0
        if self.dual_ineq is not None and b_ub is not None and len(b_ub):
            dual_val += float(self.dual_ineq @ b_ub)
        if self.dual_eq is not None and b_eq is not None and len(b_eq):
            dual_val += float(self.dual_eq @ b_eq)
        return abs(self.value - dual_val)


def _bland_simplex(a: np.ndarray, b: np.ndarray, c: np.ndarray, basis: list[int], max_pivots: int = 20_000):
    """Revised simplex (Bland's rule) on min c.x, Ax=b, x>=0 from a feasible basis.

    Returns (status, x, basis); status "optimal" or "unbounded".
    """
    m, n = a.shape
    while max_pivots > 0:
        max_pivots -= 1
        b_mat = a[:, basis]
        try:
            x_b = np.linalg.solve(b_mat, b)
            y = np.linalg.solve(b_mat.T, c[basis])
        except np.linalg.LinAlgError:
            raise NumericalError("singular basis in simplex")
        reduced = c - a.T @ y
        entering = -1
        for j in range(n):
            if j not in basis and reduced[j] < -1e-9:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n)
            x[basis] = x_b
            return "optimal", x, basis
        direction = np.linalg.solve(b_mat, a[:, entering])
        ratios = []
        for k in range(m):
            if direction[k] > 1e-11:
                ratios.append((x_b[k] / direction[k], basis[k], k))
        if not ratios:
            return "unbounded", None, basis
        min_ratio = min(r[0] for r in ratios)
        # Bland: among minimal ratios leave the smallest variable index
        leave_k = min(
            (r for r in ratios if r[0] <= min_ratio + 1e-12 * (1.0 + abs(min_ratio))),
            key=lambda r: r[1],
        )[2]
        basis[leave_k] = entering
    raise NumericalError("simplex pivot limit exceeded")


def lp_solve_dense(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None) -> LpSolution:
    """Dense small-LP solver: two-phase revised simplex with Bland's rule.

    All variables are free; inequality rows mean A_ub y <= b_ub.  Built for
    the second-stage programs of this module (at most a few hundred rows and
    columns), not as a general-purpose solver.
    """
    c = as_vector(c, name="c") if np.ndim(c) else np.array([float(c)])
    n = c.size
    a_ub = np.zeros((0, n)) if a_ub is None else np.atleast_2d(np.asarray(a_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, dtype=float))
    a_eq = np.zeros((0, n)) if a_eq is None else np.atleast_2d(np.asarray(a_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float))
    m_ub, m_eq = len(b_ub), len(b_eq)
    if a_ub.shape != (m_ub, n) or a_eq.shape != (m_eq, n):
        raise ContractViolation("LP matrix shapes are inconsistent")
    m = m_ub + m_eq

    # standard form: split free variables, slacks on inequalities, rows flipped
    # so the right-hand side is nonnegative (flip remembered for the duals)
    a_rows = np.vstack([a_ub, a_eq])
    rhs = np.concatenate([b_ub, b_eq])
    flips = np.where(rhs < 0, -1.0, 1.0)
    a_std = np.hstack([
        a_rows * flips[:, None],
        -a_rows * flips[:, None],
        np.vstack([np.eye(m_ub), np.zeros((m_eq, m_ub))]) * flips[:, None],
    ])
    b_std = rhs * flips
    n_std = a_std.shape[1]

    # phase 1: artificial basis
    a_ph1 = np.hstack([a_std, np.eye(m)])
    c_ph1 = np.concatenate([np.zeros(n_std), np.ones(m)])
    basis = list(range(n_std, n_std + m))
    status, x1, basis = _bland_simplex(a_ph1, b_std, c_ph1, basis)
    if status != "optimal" or float(c_ph1 @ x1) > 1e-8:
        return LpSolution(status="infeasible")
    # drive leftover artificials out of the basis where a structural pivot
    # exists; an artificial with no pivot marks a redundant row, dropped below
    keep_rows = list(range(m))
    for pos, var in enumerate(list(basis)):
        if var >= n_std:
            b_inv_row = np.linalg.solve(a_ph1[:, basis], np.eye(m))[pos]
            for j in range(n_std):
                if j not in basis and abs(float(b_inv_row @ a_ph1[:, j])) > 1e-9:
                    basis[pos] = j
                    break
    if any(var >= n_std for var in basis):
        rows_drop = {var - n_std for var in basis if var >= n_std}
        keep_rows = [i for i in range(m) if i not in rows_drop]
        a_std = a_std[keep_rows]
        b_std = b_std[keep_rows]
        basis = [v for v in basis if v < n_std]

    c_std = np.concatenate([c, -c, np.zeros(m_ub)])
    status, x_std, basis = _bland_simplex(a_std, b_std, c_std, basis)
    if status != "optimal":
        return LpSolution(status="unbounded")
    x = x_std[:n] - x_std[n : 2 * n]
    # duals of the kept rows, unflipped and mapped back to all rows
    y_kept = np.linalg.solve(a_std[:, basis].T, c_std[basis])
    y_full = np.zeros(m)
    for pos, i in enumerate(keep_rows):
        y_full[i] = y_kept[pos] * flips[i]
    dual_ineq = np.minimum(y_full[:m_ub], 0.0)
    dual_eq = y_full[m_ub:]
    return LpSolution(
        status="optimal",
        x=x,
        value=float(c @ x),
        dual_ineq=dual_ineq,
        dual_eq=dual_eq,
    )


def polytope_vertices(a_eq: np.ndarray, b_eq: np.ndarray, n_free: int, n_nonpos: int, cap: int = 20_000) -> np.ndarray:
    """Vertices of {v = (free block, nonpositive block) : A_eq v = b_eq, block2 <= 0}.

    Exhaustive active-set enumeration; intended for the small dual polytopes of
    shipped risk-measure models.
    """
    n = n_free + n_nonpos
    k = len(b_eq)
    need = n - k
    if need < 0 or need > n_nonpos:
        raise UnsupportedSetupError("dual polytope has no vertices under this sizing")
    from math import comb

    if comb(n_nonpos, need) > cap:
        raise UnsupportedSetupError("dual polytope too large for exhaustive vertex enumeration")
    verts = []
    for active in itertools.combinations(range(n_nonpos), need):
        rows = np.zeros((need, n))
        for r, i in enumerate(active):
            rows[r, n_free + i] = 1.0
        square = np.vstack([a_eq, rows])
        rhs = np.concatenate([b_eq, np.zeros(need)])
        try:
            v = np.linalg.solve(square, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.all(v[n_free:] <= 1e-9):
            verts.append(v)
    if not verts:
        raise UnsupportedSetupError("dual polytope vertex enumeration found nothing")
    arr = np.array(verts)
    _, idx = np.unique(np.round(arr, 10), axis=0, return_index=True)
    return arr[np.sort(idx)]


@dataclass
class SecondStage:
    value: float
    y2: np.ndarray
    lam_link: np.ndarray  # multiplier block of the coupling equalities
    lam_ineq: np.ndarray
    gap: float


@dataclass
class EprmModel:
    """Matrices of a two-stage polyhedral risk measure with affine outcome map.

    first stage: min cost_first . y1 + E[second stage], first_stage_A y1 <= first_stage_b;
    second stage: min cost_second . y2 s.t. second_stage_A y2 <= second_stage_b and
    recourse_matrix y2 = outcome * rhs_slope + rhs_offset - linking_matrix y1.
    """

    first_stage_A: np.ndarray
    first_stage_b: np.ndarray
    cost_first: np.ndarray
    second_stage_A: np.ndarray
    second_stage_b: np.ndarray
    cost_second: np.ndarray
    recourse_matrix: np.ndarray
    linking_matrix: np.ndarray
    rhs_slope: np.ndarray
    rhs_offset: np.ndarray
    label: str = "custom"
    certify: bool = True
    dual_vertices: np.ndarray = field(init=False)

    def __post_init__(self):
        self.first_stage_A = np.atleast_2d(np.asarray(self.first_stage_A, dtype=float))
        self.first_stage_b = np.atleast_1d(np.asarray(self.first_stage_b, dtype=float))
        self.second_stage_A = np.atleast_2d(np.asarray(self.second_stage_A, dtype=float))
        self.second_stage_b = np.atleast_1d(np.asarray(self.second_stage_b, dtype=float))
        self.recourse_matrix = np.atleast_2d(np.asarray(self.recourse_matrix, dtype=float))
        self.linking_matrix = np.atleast_2d(np.asarray(self.linking_matrix, dtype=float))
        self.cost_first = np.atleast_1d(np.asarray(self.cost_first, dtype=float))
        self.cost_second = np.atleast_1d(np.asarray(self.cost_second, dtype=float))
        self.rhs_slope = np.atleast_1d(np.asarray(self.rhs_slope, dtype=float))
        self.rhs_offset = np.atleast_1d(np.asarray(self.rhs_offset, dtype=float))
        k1, k2 = self.cost_first.size, self.cost_second.size
        n22 = self.recourse_matrix.shape[0]
        if self.first_stage_A.shape[1] != k1 or self.first_stage_A.shape[0] != self.first_stage_b.size:
            raise ContractViolation("first-stage dimensions are inconsistent")
        if self.second_stage_A.shape != (self.second_stage_b.size, k2):
            raise ContractViolation("second-stage dimensions are inconsistent")
        if self.recourse_matrix.shape != (n22, k2) or self.linking_matrix.shape != (n22, k1):
            raise ContractViolation("coupling dimensions are inconsistent")
        if self.rhs_slope.shape != (n22,) or self.rhs_offset.shape != (n22,):
            raise ContractViolation("outcome map dimensions are inconsistent")
        self._validate()

    @property
    def n_link(self) -> int:
        return self.recourse_matrix.shape[0]

    @property
    def n_second_ineq(self) -> int:
        return self.second_stage_b.size

    def _validate(self):
        k1 = self.cost_first.size
        # first-stage set nonempty and bounded: optimize +-each coordinate
        for j in range(k1):
            for sgn in (1.0, -1.0):
                e = np.zeros(k1)
                e[j] = sgn
                res = lp_solve_dense(e, a_ub=self.first_stage_A, b_ub=self.first_stage_b)
                if res.status == "infeasible":
                    raise ContractViolation("first-stage feasible set is empty")
                if res.status == "unbounded":
                    raise ContractViolation("first-stage feasible set is unbounded")
        # complete recourse: the recourse image covers +-every coordinate direction
        for i in range(self.n_link):
            for sgn in (1.0, -1.0):
                e = np.zeros(self.n_link)
                e[i] = sgn
                res = lp_solve_dense(
                    np.zeros(self.cost_second.size),
                    a_ub=self.second_stage_A,
                    b_ub=self.second_stage_b,
                    a_eq=self.recourse_matrix,
                    b_eq=e,
                )
                if res.status != "optimal":
                    raise ContractViolation("complete recourse fails: coordinate direction unreachable")
        # dual feasible set: nonempty, bounded, and nonnegative against the slope
        a_eq = np.hstack([self.recourse_matrix.T, self.second_stage_A.T])
        n_l1, n_l2 = self.n_link, self.n_second_ineq
        probe = lp_solve_dense(
            np.zeros(n_l1 + n_l2),
            a_ub=np.hstack([np.zeros((n_l2, n_l1)), np.eye(n_l2)]),
            b_ub=np.zeros(n_l2),
            a_eq=a_eq,
            b_eq=self.cost_second,
        )
        if probe.status != "optimal":
            raise ContractViolation("second-stage dual set is empty")
        bound_rows = np.hstack([np.zeros((n_l2, n_l1)), np.eye(n_l2)])
        for j in range(n_l1 + n_l2):
            for sgn in (1.0, -1.0):
                e = np.zeros(n_l1 + n_l2)
                e[j] = sgn
                res = lp_solve_dense(e, a_ub=bound_rows, b_ub=np.zeros(n_l2), a_eq=a_eq, b_eq=self.cost_second)
                if res.status != "optimal":
                    raise ContractViolation("second-stage dual set is unbounded")
        slope_obj = np.concatenate([self.rhs_slope, np.zeros(n_l2)])
        res = lp_solve_dense(slope_obj, a_ub=bound_rows, b_ub=np.zeros(n_l2), a_eq=a_eq, b_eq=self.cost_second)
        if res.value < -1e-9:
            raise ContractViolation("monotonicity fails: a dual point has negative slope weight")
        self.dual_vertices = polytope_vertices(a_eq, self.cost_second, n_l1, n_l2)

    def to_config(self) -> dict:
        """JSON-ready representation: matrices row-major, dimensions explicit."""
        return {
            "label": self.label,
            "k1": self.cost_first.size,
            "k2": self.cost_second.size,
            "n_link": self.n_link,
            "first_stage_A": self.first_stage_A.tolist(),
            "first_stage_b": self.first_stage_b.tolist(),
            "cost_first": self.cost_first.tolist(),
            "second_stage_A": self.second_stage_A.tolist(),
            "second_stage_b": self.second_stage_b.tolist(),
            "cost_second": self.cost_second.tolist(),
            "recourse_matrix": self.recourse_matrix.tolist(),
            "linking_matrix": self.linking_matrix.tolist(),
            "rhs_slope": self.rhs_slope.tolist(),
            "rhs_offset": self.rhs_offset.tolist(),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "EprmModel":
        keys = (
            "first_stage_A", "first_stage_b", "cost_first", "second_stage_A",
            "second_stage_b", "cost_second", "recourse_matrix", "linking_matrix",
            "rhs_slope", "rhs_offset",
        )
        return cls(**{k: cfg[k] for k in keys}, label=cfg.get("label", "custom"))

    # per-vertex slope/offset pieces of the dual objective, affine in the outcome
    def dual_pieces(self, y1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lam1 = self.dual_vertices[:, : self.n_link]
        lam2 = self.dual_vertices[:, self.n_link :]
        slopes = lam1 @ self.rhs_slope
        consts = lam1 @ (self.rhs_offset - self.linking_matrix @ y1) + lam2 @ self.second_stage_b
        return slopes, consts

    def _best_vertex(self, scores: np.ndarray) -> int:
        top = float(np.max(scores))
        ties = np.nonzero(scores >= top - 1e-9 * (1.0 + abs(top)))[0]
        if len(ties) == 1:
            return int(ties[0])
        lam1_l1 = np.sum(np.abs(self.dual_vertices[ties, : self.n_link]), axis=1)
        ties = ties[lam1_l1 <= np.min(lam1_l1) + 1e-12]
        return int(min(ties, key=lambda i: tuple(self.dual_vertices[i])))

    def second_stage(self, y1: np.ndarray, outcome: float) -> SecondStage:
        """Solve the recourse program at (first stage, realized outcome).

        The value and multipliers come from the exact dual-vertex maximization;
        when ``certify`` is on, the primal program is also solved by the
        simplex and the duality gap is checked to 1e-8.
        """
        y1 = as_vector(y1, dim=self.cost_first.size, name="y1")
        rhs = outcome * self.rhs_slope + self.rhs_offset - self.linking_matrix @ y1
        slopes, consts = self.dual_pieces(y1)
        scores = slopes * outcome + consts
        best = self._best_vertex(scores)
        dual_value = float(scores[best])
        lam1 = self.dual_vertices[best, : self.n_link]
        lam2 = self.dual_vertices[best, self.n_link :]
        y2 = None
        gap = 0.0
        if self.certify:
            primal = lp_solve_dense(
                self.cost_second,
                a_ub=self.second_stage_A,
                b_ub=self.second_stage_b,
                a_eq=self.recourse_matrix,
                b_eq=rhs,
            )
            if primal.status != "optimal":
                raise NumericalError(f"second stage did not solve: {primal.status}")
            gap = abs(primal.value - dual_value)
            if gap > 1e-8 * (1.0 + abs(dual_value)):
                raise NumericalError(f"second-stage duality gap {gap:.3e} exceeds tolerance")
            y2 = primal.x
        return SecondStage(dual_value, y2, lam1, lam2, gap)

    def risk_value_batch(self, y1: np.ndarray, outcomes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Recourse values and maximizing-vertex indices for many outcomes at once.

        Vertex choice scans in increasing first-block l1 norm, so ties resolve
        exactly as in :meth:`second_stage`.
        """
        slopes, consts = self.dual_pieces(y1)
        scores = np.outer(outcomes, slopes) + consts[None, :]
        top = np.max(scores, axis=1)
        order = np.argsort(np.sum(np.abs(self.dual_vertices[:, : self.n_link]), axis=1), kind="stable")
        pick = np.full(len(outcomes), -1, dtype=int)
        tol = 1e-9 * (1.0 + np.abs(top))
        for j in order:
            hit = (pick < 0) & (scores[:, j] >= top - tol)
            pick[hit] = j
        return top, pick


def first_stage_interval(model: EprmModel) -> tuple[float, float]:
    """[min, max] of the (scalar) first-stage variable over its feasible set."""
    if model.cost_first.size != 1:
        raise UnsupportedSetupError("interval probe needs a scalar first stage")
    lo = lp_solve_dense(np.ones(1), a_ub=model.first_stage_A, b_ub=model.first_stage_b)
    hi = lp_solve_dense(-np.ones(1), a_ub=model.first_stage_A, b_ub=model.first_stage_b)
    return float(lo.value), float(-hi.value)


def cvar_as_eprm(eps: float, bound: float = 1.0) -> EprmModel:
    """Tail-expectation risk at level eps as a two-stage model.

    First stage is the scalar threshold (bounded by ``bound``, which must
    cover the outcome range); the second stage buys the positive part of the
    excess at price 1/eps.
    """
    if not 0.0 < eps <= 1.0:
        raise ConfigError("eps must lie in (0, 1]")
    return EprmModel(
        first_stage_A=[[1.0], [-1.0]],
        first_stage_b=[bound, bound],
        cost_first=[1.0],
        second_stage_A=-np.eye(2),
        second_stage_b=np.zeros(2),
        cost_second=[1.0 / eps, 0.0],
        recourse_matrix=[[1.0, -1.0]],
        linking_matrix=[[1.0]],
        rhs_slope=[1.0],
        rhs_offset=[0.0],
        label=f"cvar({eps})",
    )


def expectation_as_eprm() -> EprmModel:
    """Plain expectation as the degenerate two-stage model (pass-through recourse)."""
    return EprmModel(
        first_stage_A=[[1.0], [-1.0]],
        first_stage_b=[0.0, 0.0],
        cost_first=[0.0],
        second_stage_A=-np.eye(2),
        second_stage_b=np.zeros(2),
        cost_second=[1.0, -1.0],
        recourse_matrix=[[1.0, -1.0]],
        linking_matrix=[[0.0]],
        rhs_slope=[1.0],
        rhs_offset=[0.0],
        label="expectation",
    )


def mean_cvar_as_eprm(alpha0: float, alpha1: float, eps: float, bound: float = 1.0) -> EprmModel:
    """alpha0 * expectation + alpha1 * tail expectation as one two-stage model."""
    if not 0.0 < eps <= 1.0:
        raise ConfigError("eps must lie in (0, 1]")
    if alpha0 < 0 or alpha1 < 0:
        raise ConfigError("mixture weights must be nonnegative")
    return EprmModel(
        first_stage_A=[[1.0], [-1.0]],
        first_stage_b=[bound, bound],
        cost_first=[alpha1],
        second_stage_A=-np.eye(4),
        second_stage_b=np.zeros(4),
        cost_second=[alpha1 / eps, 0.0, alpha0, -alpha0],
        recourse_matrix=[[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]],
        linking_matrix=[[1.0], [0.0]],
        rhs_slope=[1.0, 1.0],
        rhs_offset=[0.0, 0.0],
        label=f"mean_cvar({alpha0},{alpha1},{eps})",
    )


def _project_polytope(a: np.ndarray, b: np.ndarray, x: np.ndarray, sweeps: int = 5000) -> np.ndarray:
    """Euclidean projection onto {y : a y <= b} by cyclic corrections (Dykstra)."""
    m = len(b)
    x = np.array(x, dtype=float)
    corr = np.zeros((m, x.size))
    for _ in range(sweeps):
        moved = 0.0
        for i in range(m):
            y = x + corr[i]
            viol = float(a[i] @ y) - b[i]
            if viol > 0:
                step = y - viol / float(a[i] @ a[i]) * a[i]
            else:
                step = y
            corr[i] = y - step
            moved = max(moved, float(np.max(np.abs(step - x))))
            x = step
        if moved < 1e-12:
            break
    return x


def eprm_evaluate(model: EprmModel, outcomes, weights=None, tol: float = 1e-7, max_iter: int = 2000) -> float:
    """Risk of an empirical distribution: certified first-stage minimization.

    Each iterate contributes an affine minorant of the risk objective (built
    from the per-atom dual maximizers); the accumulated cutting-plane model is
    minimized over the first-stage set by a small epigraph LP, certifying the
    gap, and the next iterate blends the model minimizer with the incumbent.
    """
    z = as_vector(outcomes, name="outcomes")
    if weights is None:
        w = np.full(z.size, 1.0 / z.size)
    else:
        w = as_vector(weights, dim=z.size, name="weights")
        if abs(float(np.sum(w)) - 1.0) > 1e-9 or np.any(w < 0):
            raise ContractViolation("weights must be a probability vector")
    k1 = model.cost_first.size
    y = _project_polytope(model.first_stage_A, model.first_stage_b, np.zeros(k1))
    lam1_all = model.dual_vertices[:, : model.n_link]
    lam2_all = model.dual_vertices[:, model.n_link :]

    def value_and_cut(y1):
        vals, picks = model.risk_value_batch(y1, z)
        total = float(model.cost_first @ y1) + float(w @ vals)
        # cut: total + slope.(u - y1) minorizes the objective everywhere
        slope = model.cost_first - model.linking_matrix.T @ (lam1_all[picks].T @ w)
        offset = float(
            w @ (lam1_all[picks] @ model.rhs_offset + z * (lam1_all[picks] @ model.rhs_slope))
        ) + float(w @ (lam2_all[picks] @ model.second_stage_b))
        return total, slope, offset

    slopes: list[np.ndarray] = []
    offsets: list[float] = []
    best_val = math.inf
    best_y = y.copy()
    best_lb = -math.inf
    m1 = model.first_stage_A.shape[0]
    for _ in range(max_iter):
        val, slope, offset = value_and_cut(y)
        slopes.append(slope)
        offsets.append(offset)
        if val < best_val:
            best_val, best_y = val, y.copy()
        # epigraph LP over the accumulated cuts: min t, t >= offset_k + slope_k.u
        n_cuts = len(slopes)
        a_ub = np.zeros((n_cuts + m1, k1 + 1))
        b_ub = np.zeros(n_cuts + m1)
        for i in range(n_cuts):
            a_ub[i, :k1] = slopes[i]
            a_ub[i, k1] = -1.0
            b_ub[i] = -offsets[i]
        a_ub[n_cuts:, :k1] = model.first_stage_A
        b_ub[n_cuts:] = model.first_stage_b
        cost = np.zeros(k1 + 1)
        cost[k1] = 1.0
        res = lp_solve_dense(cost, a_ub=a_ub, b_ub=b_ub)
        if res.status != "optimal":
            raise NumericalError(f"cutting-plane model LP failed: {res.status}")
        best_lb = max(best_lb, float(res.value))
        if best_val - best_lb <= tol:
            return best_val
        y = _project_polytope(
            model.first_stage_A, model.first_stage_b, 0.5 * res.x[:k1] + 0.5 * best_y
        )
    raise ConvergenceError(f"risk evaluation stalled: gap {best_val - best_lb:.3e} > {tol:.1e}")


class LiftedRiskProblem(ProblemSpec):
    """Risk-neutral reformulation: minimize first-stage cost plus expected recourse
    of the inner random cost, over (threshold, inner decision)."""

    family = "eprm_lifted"

    def __init__(self, model: EprmModel, inner: ProblemSpec):
        if model.cost_first.size != 1:
            raise UnsupportedSetupError("lifting is shipped for scalar first stages")
        if not isinstance(inner.feasible_set, FloorSimplex):
            raise UnsupportedSetupError("lifting is shipped for simplex inner sets")
        lo, hi = first_stage_interval(model)
        y_independent = float(np.max(np.abs(model.linking_matrix))) == 0.0 and float(
            np.max(np.abs(model.cost_first))
        ) == 0.0
        if hi - lo < 1e-12:
            if not y_independent:
                raise UnsupportedSetupError("degenerate first-stage interval on a coupled model")
            bound = 1.0
        elif abs(hi + lo) > 1e-12:
            raise UnsupportedSetupError("lifting is shipped for symmetric first-stage intervals")
        else:
            bound = hi
        self.model = model
        self.inner = inner
        self.norm = "l2"
        self.feasible_set = BoxSimplex(
            inner.feasible_set.dimension,
            bound=bound,
            total=inner.feasible_set.total,
            floor=inner.feasible_set.floor,
        )
        lam1 = model.dual_vertices[:, : model.n_link]
        kappa = float(np.max(np.abs(lam1 @ model.rhs_slope)))
        link = float(np.max(np.abs(lam1 @ model.linking_matrix)))
        inner_grad_raw = inner.sheet.grad_bound + inner.sheet.grad_noise
        c1 = float(np.abs(model.cost_first[0]))
        grad_raw = math.sqrt((c1 + link) ** 2 + (kappa * inner_grad_raw) ** 2)
        self.sheet = ConstantSheet(
            grad_bound=grad_raw,
            value_noise=max(2.0 * kappa * inner.sheet.value_noise, 1e-12),
            grad_noise=2.0 * grad_raw,
            set_radius=self.feasible_set.max_distance_from(self.feasible_set.start_point(), "l2"),
            grad_moment=math.sqrt(2.0) * grad_raw,
        )

    def split(self, x):
        return np.atleast_1d(x[:1]), x[1:]

    def oracle(self, x, xi):
        y1, inner_x = self.split(np.asarray(x, dtype=float))
        inner_sample = self.inner.oracle(inner_x, xi)
        stage = self.model.second_stage(y1, inner_sample.value)
        value = float(self.model.cost_first @ y1) + stage.value
        g_first = self.model.cost_first - self.model.linking_matrix.T @ stage.lam_link
        chain = float(stage.lam_link @ self.model.rhs_slope)
        return OracleSample(value, np.concatenate([g_first, chain * inner_sample.grad]))

    def exact_f(self, x):
        support = self.inner.support()
        if support is None:
            raise UnsupportedSetupError("exact values need a finite inner distribution")
        atoms, weights = support
        y1, inner_x = self.split(np.asarray(x, dtype=float))
        outcomes = np.array([self.inner.oracle(inner_x, a).value for a in atoms])
        vals, _ = self.model.risk_value_batch(y1, outcomes)
        return float(self.model.cost_first @ y1) + float(weights @ vals)

    def sample_xi(self, rng, size=None):
        return self.inner.sample_xi(rng, size)

    def support(self):
        return self.inner.support()

    def to_config(self):
        return {"family": self.family, "model": self.model.label, "inner": self.inner.to_config()}


def eprm_reformulate(model: EprmModel, inner: ProblemSpec) -> LiftedRiskProblem:
    """Wrap (risk measure, inner stochastic cost) as a risk-neutral lifted problem."""
    return LiftedRiskProblem(model, inner)

"""Two-stage risk measures: LP engine, model validation, lifted oracles."""

import itertools
import json
import math

import numpy as np
import pytest

from mirror_bounds import (
    ContractViolation,
    SolverConfig,
    gen_instance2,
    gen_linear_loss,
    smd_run,
)
from mirror_bounds.eprm import (
    EprmModel,
    cvar_as_eprm,
    eprm_evaluate,
    eprm_reformulate,
    expectation_as_eprm,
    first_stage_interval,
    lp_solve_dense,
    mean_cvar_as_eprm,
)
from mirror_bounds.prox import EuclideanSetup


def empirical_cvar(values, eps):
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    mass = eps * v.size
    m = int(math.floor(mass))
    out = float(np.sum(v[:m]))
    if m < v.size and mass > m:
        out += (mass - m) * v[m]
    return out / mass


def test_lp_one_variable():
    res = lp_solve_dense([1.0], a_ub=[[-1.0]], b_ub=[-0.3])
    assert res.status == "optimal"
    assert res.value == pytest.approx(0.3, abs=1e-12)
    assert res.duality_gap(np.array([-0.3]), None) <= 1e-10


def test_lp_redundant_equalities():
    # duplicated and linearly dependent equality rows must be dropped, not fail
    res = lp_solve_dense(
        [1.0, 1.0],
        a_ub=[[-1.0, 0.0], [0.0, -1.0]],
        b_ub=[0.0, 0.0],
        a_eq=[[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]],
        b_eq=[1.0, 1.0, 2.0],
    )
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-10)
    dual_val = float(res.dual_eq @ [1.0, 1.0, 2.0]) + float(res.dual_ineq @ [0.0, 0.0])
    assert dual_val == pytest.approx(1.0, abs=1e-8)


def test_lp_infeasible_and_unbounded():
    res = lp_solve_dense([1.0], a_ub=[[1.0], [-1.0]], b_ub=[-1.0, 0.0])
    assert res.status == "infeasible"
    res = lp_solve_dense([-1.0], a_ub=[[-1.0]], b_ub=[0.0])
    assert res.status == "unbounded"


def brute_vertex_minimum(c, a_ub, b_ub):
    """Enumerate basic feasible points of {A y <= b} (full-dimensional, bounded)."""
    m, n = a_ub.shape
    best = math.inf
    for rows in itertools.combinations(range(m), n):
        sub = a_ub[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-9:
            continue
        y = np.linalg.solve(sub, b_ub[list(rows)])
        if np.all(a_ub @ y <= b_ub + 1e-9):
            best = min(best, float(c @ y))
    return best


def test_lp_against_vertex_enumeration():
    rng = np.random.default_rng(0)
    for trial in range(25):
        n = 5
        a_box = np.vstack([np.eye(n), -np.eye(n)])
        b_box = np.concatenate([np.ones(n), np.zeros(n)])
        a_cut = rng.normal(size=(4, n))
        b_cut = a_cut @ np.full(n, 0.5) + rng.uniform(0.05, 0.5, size=4)
        a_ub = np.vstack([a_box, a_cut])
        b_ub = np.concatenate([b_box, b_cut])
        c = rng.normal(size=n)
        res = lp_solve_dense(c, a_ub=a_ub, b_ub=b_ub)
        assert res.status == "optimal"
        assert res.value == pytest.approx(brute_vertex_minimum(c, a_ub, b_ub), abs=1e-9)
        # dual certificate: feasibility and zero gap
        assert res.dual_ineq.max() <= 1e-9
        assert np.max(np.abs(a_ub.T @ res.dual_ineq - c)) <= 1e-8
        assert res.duality_gap(b_ub, None) <= 1e-8 * (1 + abs(res.value))


def test_cvar_model_construction_and_dual_range():
    eps = 0.25
    model = cvar_as_eprm(eps)
    lam1 = model.dual_vertices[:, 0]
    assert lam1.min() == pytest.approx(0.0, abs=1e-12)
    assert lam1.max() == pytest.approx(1.0 / eps, abs=1e-12)
    # LP probes of the dual polytope reproduce the same range
    a_eq = np.hstack([model.recourse_matrix.T, model.second_stage_A.T])
    bound_rows = np.hstack([np.zeros((2, 1)), np.eye(2)])
    lo = lp_solve_dense(np.array([1.0, 0, 0]), a_ub=bound_rows, b_ub=np.zeros(2),
                        a_eq=a_eq, b_eq=model.cost_second)
    hi = lp_solve_dense(np.array([-1.0, 0, 0]), a_ub=bound_rows, b_ub=np.zeros(2),
                        a_eq=a_eq, b_eq=model.cost_second)
    assert lo.value == pytest.approx(0.0, abs=1e-10)
    assert -hi.value == pytest.approx(1.0 / eps, abs=1e-10)


def test_model_validation_rejects_unbounded_first_stage():
    with pytest.raises(ContractViolation):
        EprmModel(
            first_stage_A=[[1.0]],  # y1 <= 1 only: unbounded below
            first_stage_b=[1.0],
            cost_first=[1.0],
            second_stage_A=-np.eye(2),
            second_stage_b=np.zeros(2),
            cost_second=[1.0, 0.0],
            recourse_matrix=[[1.0, -1.0]],
            linking_matrix=[[1.0]],
            rhs_slope=[1.0],
            rhs_offset=[0.0],
        )


def test_model_validation_rejects_incomplete_recourse():
    with pytest.raises(ContractViolation):
        EprmModel(
            first_stage_A=[[1.0], [-1.0]],
            first_stage_b=[1.0, 1.0],
            cost_first=[1.0],
            second_stage_A=-np.eye(1),
            second_stage_b=np.zeros(1),
            cost_second=[1.0],
            recourse_matrix=[[1.0]],  # only u >= 0 reachable: no negative directions
            linking_matrix=[[1.0]],
            rhs_slope=[1.0],
            rhs_offset=[0.0],
        )


def test_second_stage_values_and_duality_gap():
    model = cvar_as_eprm(0.5)
    stage = model.second_stage(np.array([0.2]), 0.7)
    assert stage.value == pytest.approx((0.7 - 0.2) / 0.5, abs=1e-12)
    assert stage.gap <= 1e-8
    below = model.second_stage(np.array([0.2]), -0.5)
    assert below.value == pytest.approx(0.0, abs=1e-12)
    # at the kink the small-multiplier vertex is chosen (zero-slope selection)
    kink = model.second_stage(np.array([0.2]), 0.2)
    assert kink.value == pytest.approx(0.0, abs=1e-12)
    assert kink.lam_link[0] == pytest.approx(0.0, abs=1e-12)


def test_second_stage_monotone_in_outcome():
    rng = np.random.default_rng(1)
    model = mean_cvar_as_eprm(0.4, 0.6, 0.3)
    for _ in range(1000):
        y1 = np.array([rng.uniform(-1, 1)])
        z2 = rng.uniform(-1, 1)
        z1 = z2 + rng.uniform(0, 1.5)
        q1 = model.second_stage(y1, min(z1, 1.0)).value
        q2 = model.second_stage(y1, z2).value
        assert q1 >= q2 - 1e-10


def test_eprm_evaluate_examples():
    assert eprm_evaluate(cvar_as_eprm(0.5), [0.0, 1.0]) == pytest.approx(1.0, abs=1e-7)
    assert eprm_evaluate(cvar_as_eprm(0.25), [0.0, 1.0]) == pytest.approx(1.0, abs=1e-7)
    assert eprm_evaluate(cvar_as_eprm(1.0), [0.2, 0.6, 0.7]) == pytest.approx(0.5, abs=1e-7)
    assert eprm_evaluate(cvar_as_eprm(0.37), [0.42]) == pytest.approx(0.42, abs=1e-7)
    assert eprm_evaluate(expectation_as_eprm(), [0.2, 0.4, 0.9]) == pytest.approx(0.5, abs=1e-7)


def test_eprm_evaluate_matches_sorted_tail_on_random_data():
    rng = np.random.default_rng(2)
    for _ in range(100):
        eps = float(rng.uniform(0.05, 1.0))
        atoms = rng.uniform(-1, 1, size=int(rng.integers(2, 40)))
        val = eprm_evaluate(cvar_as_eprm(eps), atoms)
        assert val == pytest.approx(empirical_cvar(atoms, eps), abs=1e-7)


def test_first_stage_interval_probe():
    lo, hi = first_stage_interval(cvar_as_eprm(0.3, bound=2.0))
    assert (lo, hi) == (pytest.approx(-2.0), pytest.approx(2.0))


def test_model_json_round_trip():
    model = mean_cvar_as_eprm(0.3, 0.7, 0.4)
    cfg = model.to_config()
    assert cfg["k1"] == 1 and cfg["k2"] == 4 and cfg["n_link"] == 2
    clone = EprmModel.from_config(json.loads(json.dumps(cfg)))
    np.testing.assert_allclose(clone.dual_vertices, model.dual_vertices)
    assert clone.second_stage(np.array([0.1]), 0.6).value == pytest.approx(
        model.second_stage(np.array([0.1]), 0.6).value, abs=1e-12
    )


def test_lifted_oracle_matches_closed_form():
    # keystone: risk of the linear loss over the simplex vs the closed-form
    # integrand on the lifted box x simplex set
    n = 6
    inst = gen_instance2(n, 0.3, 0.7, 0.4, pool_size=1000, seed=3)
    inner = gen_linear_loss(n, pool=inst.pool, seed=3)
    lifted = eprm_reformulate(mean_cvar_as_eprm(0.3, 0.7, 0.4), inner)
    rng = np.random.default_rng(4)
    for _ in range(1000):
        x = lifted.feasible_set.sample(rng)
        xi = inst.sample_xi(rng)
        ours = lifted.oracle(x, xi)
        ref = inst.oracle(x, xi)
        assert ours.value == pytest.approx(ref.value, abs=1e-9)
        np.testing.assert_allclose(ours.grad, ref.grad, atol=1e-9)


def test_lifted_expectation_equals_inner():
    inner = gen_linear_loss(4, pool_size=1000, seed=5)
    lifted = eprm_reformulate(expectation_as_eprm(), inner)
    rng = np.random.default_rng(6)
    for _ in range(200):
        x = lifted.feasible_set.sample(rng)
        xi = inner.sample_xi(rng)
        assert lifted.oracle(x, xi).value == pytest.approx(
            inner.oracle(x[1:], xi).value, abs=1e-12
        )


def test_lifted_subgradient_inequality_and_bound():
    inst = gen_instance2(5, 0.2, 0.8, 0.3, pool_size=1000, seed=7)
    inner = gen_linear_loss(5, pool=inst.pool, seed=7)
    lifted = eprm_reformulate(mean_cvar_as_eprm(0.2, 0.8, 0.3), inner)
    rng = np.random.default_rng(8)
    for _ in range(1000):
        x0 = lifted.feasible_set.sample(rng)
        x1 = lifted.feasible_set.sample(rng)
        xi = inst.sample_xi(rng)
        s0 = lifted.oracle(x0, xi)
        v1 = lifted.oracle(x1, xi).value
        assert v1 >= s0.value + float(s0.grad @ (x1 - x0)) - 1e-7
        assert np.linalg.norm(s0.grad) <= lifted.sheet.grad_bound + 1e-9


def test_lifted_exact_objective_matches_pool_average():
    inst = gen_instance2(4, 0.3, 0.7, 0.4, pool_size=1000, seed=9)
    inner = gen_linear_loss(4, pool=inst.pool, seed=9)
    lifted = eprm_reformulate(mean_cvar_as_eprm(0.3, 0.7, 0.4), inner)
    rng = np.random.default_rng(10)
    x = lifted.feasible_set.sample(rng)
    assert lifted.exact_f(x) == pytest.approx(inst.exact_f(x), abs=1e-9)


def test_smd_on_lifted_equals_smd_on_closed_form():
    n = 5
    inst = gen_instance2(n, 0.3, 0.7, 0.4, pool_size=1000, seed=11)
    inner = gen_linear_loss(n, pool=inst.pool, seed=11)
    lifted = eprm_reformulate(mean_cvar_as_eprm(0.3, 0.7, 0.4), inner)
    setup_a = EuclideanSetup(inst.feasible_set)
    setup_b = EuclideanSetup(lifted.feasible_set)
    config = dict(n_calls=400, seed=12, step_override=0.05)
    run_a = smd_run(inst, setup_a, SolverConfig(**config))
    run_b = smd_run(lifted, setup_b, SolverConfig(**config))
    assert run_a.value_estimate == pytest.approx(run_b.value_estimate, abs=1e-7)
    np.testing.assert_allclose(run_a.solution, run_b.solution, atol=1e-7)

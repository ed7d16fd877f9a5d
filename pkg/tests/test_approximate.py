import math

import numpy as np
import pytest

from hermite_spaces.approximate import (
    ApproximationPlan,
    a_priori_bound,
    exact_l2_error,
    exp_recipe,
    exp_recipe_parameters,
    manual_plan,
    matched_M,
    run,
    spt_orders,
    spt_recipe,
)
from hermite_spaces.errors import BudgetExceededError, DimensionMismatchError
from hermite_spaces.quadrature import TensorRule, log_tail_F
from hermite_spaces.spectral import ExpLinear, FiniteSeries, KernelSection, SpectralFunction
from hermite_spaces.weights import WeightSpec, enumerate_index_set

HALF = WeightSpec((1.0,), (1.0,), 0.5)


def test_plan_validation():
    with pytest.raises(DimensionMismatchError):
        ApproximationPlan(HALF, 10.0, (3, 3))
    with pytest.raises(ValueError):
        ApproximationPlan(HALF, 1.0, (3,))
    with pytest.raises(ValueError):
        ApproximationPlan(HALF, 10.0, (0,))
    p = manual_plan(HALF, 10.0, (5,))
    assert p.n == 5 and len(p.index_set) == 4 and p.cost == 20


def test_polynomial_is_recovered_exactly():
    # degree < m in each coordinate and inside A: the algorithm is exact
    spec = WeightSpec((1.0, 1.0), (1.0, 1.0), 0.5)
    g = SpectralFunction.from_dict(2, {(0, 0): 0.3, (2, 1): -1.2, (1, 3): 0.7})
    plan = manual_plan(spec, 2.0**6, (6, 6))
    out = run(plan, FiniteSeries(g))
    assert exact_l2_error(out, g, plan.index_set) < 1e-14


def test_output_is_quadrature_of_f_times_H():
    spec = WeightSpec((1.0, 2.0), (1.0, 1.0), 0.5)
    f = ExpLinear((0.4, -0.3))
    plan = manual_plan(spec, 30.0, (5, 4))
    out = run(plan, f)
    X, w = TensorRule((5, 4)).nodes_grid(), TensorRule((5, 4)).weights_grid()
    from hermite_spaces.hermite import eval_multi
    for h, c in out.items():
        ref = sum(wi * f(x[None])[0] * eval_multi(x, h) for x, wi in zip(X, w))
        assert c == pytest.approx(ref, abs=1e-15)
    assert [tuple(k) for k in out.indices] == list(plan.index_set.members)


def test_matched_M_keeps_resolved_indices():
    spec = WeightSpec((1.0, 2.0), (1.0, 1.0), 0.5)
    M = matched_M(spec, (6, 4))
    A = enumerate_index_set(spec, M)
    # min_j a_j m_j = 6: every kept index has exponent < 6
    assert A.max_degrees == (5, 2)
    assert (5, 0) in A and (6, 0) not in A


def test_a_priori_bound_parts():
    r = a_priori_bound(HALF, 200.0, (473,))
    assert r.recompute() == pytest.approx(r.a_priori_bound, rel=1e-14)
    assert r.truncation == 1 / 200
    assert r.K == pytest.approx(11.174925682500678)
    assert r.D == pytest.approx(47.734, abs=1e-3)
    assert r.a_priori_bound == pytest.approx(math.sqrt(1 / 200), rel=1e-12)
    huge = a_priori_bound(HALF, 1e4, (2,))
    assert huge.a_priori_bound > 1e10


def test_exp_recipe_frozen_values():
    p = exp_recipe_parameters(HALF, 0.1)
    assert p["m"] == 473 and p["orders"] == (473,) and p["M"] == pytest.approx(200.0)
    assert [exp_recipe_parameters(HALF, e)["m"] for e in (0.5, 1e-3, 1e-6)] == [209, 1226, 2356]
    spec2 = WeightSpec((1.0, 1.0), (1.0, 1.0), 0.5)
    assert exp_recipe_parameters(spec2, 0.1)["orders"] == (559, 559)


@pytest.mark.parametrize("eps", [0.5, 0.1, 1e-3, 1e-6])
def test_exp_recipe_postconditions(eps):
    plan = exp_recipe(HALF, eps)
    p = exp_recipe_parameters(HALF, eps)
    assert log_tail_F(HALF, plan.orders) <= 2 * p["log_eta"]
    assert a_priori_bound(HALF, plan.M, plan.orders).a_priori_bound <= eps
    assert plan.provenance["recipe"] == "exp"


def test_exp_recipe_monotone_in_eps():
    spec = WeightSpec((1.0, 2.0), (1.0, 2.0), 0.5)
    ns = [math.prod(exp_recipe_parameters(spec, e)["orders"]) for e in (0.5, 0.05, 5e-3, 5e-4)]
    assert ns == sorted(ns)


def test_exp_recipe_budget():
    spec = WeightSpec((1.0, 1.0, 1.0), (1.0, 1.0, 1.0), 0.5)
    with pytest.raises(BudgetExceededError) as info:
        exp_recipe(spec, 1e-3, point_budget=10**6)
    assert info.value.details["n"] > 10**6
    assert exp_recipe(spec, 1e-3, point_budget=None, cost_budget=None).n == info.value.details["n"]


def test_exp_recipe_run_meets_target():
    f = ExpLinear((1.0,)).unit(HALF)
    plan = exp_recipe(HALF, 0.1)
    err = exact_l2_error(run(plan, f), f.truth(), plan.index_set)
    assert err <= 0.1
    assert err == pytest.approx(0.00194177, rel=1e-4)


def test_spt_orders_are_odd_and_stabilize():
    spec = WeightSpec([2.0**j for j in range(8)], [2.0**j for j in range(8)], 1e-4)
    orders = spt_orders(spec, 2e6, 0.9)
    assert all(m % 2 == 1 for m in orders)
    assert orders[-1] == 1 and orders[:3] == (19, 5, 3)
    plan = spt_recipe(spec, 1e-3, 0.9, 0.5)
    assert plan.orders == orders and plan.provenance["M_source"].startswith("default")
    with pytest.raises(ValueError):
        spt_recipe(spec, 1e-3, 1.5, 0.5)


def test_exact_error_against_independent_quadrature():
    spec = WeightSpec((1.0, 1.0), (1.0, 1.0), 0.6)
    f = KernelSection(spec, (0.4, -0.9))
    plan = manual_plan(spec, 40.0, (5, 6))
    out = run(plan, f)
    exact = exact_l2_error(out, f.truth(), plan.index_set)
    q = TensorRule((120, 120))
    X, w = q.nodes_grid(), q.weights_grid()
    indep = math.sqrt(np.sum(w * (f(X) - out(X)) ** 2))
    assert exact == pytest.approx(indep, rel=1e-8)


def test_exact_error_rejects_foreign_output():
    spec = WeightSpec((1.0,), (1.0,), 0.5)
    A = enumerate_index_set(spec, 4.0)
    out = SpectralFunction.from_dict(1, {(5,): 1.0})
    with pytest.raises(ValueError):
        exact_l2_error(out, out, A)

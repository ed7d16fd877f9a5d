import math

import numpy as np
import pytest

from hermite_spaces.approximate import exact_l2_error, exp_recipe, manual_plan, run
from hermite_spaces.errors import DimensionMismatchError
from hermite_spaces.hermite import eval_all
from hermite_spaces.integrate import (
    IntegrationRule,
    integral_reference,
    integrate_tensor,
    reduce_approximation,
    tensor_integration_rule,
)
from hermite_spaces.quadrature import TensorRule
from hermite_spaces.spectral import ExpLinear, KernelSection
from hermite_spaces.weights import WeightSpec


def test_constant_and_exp():
    assert integrate_tensor(TensorRule((3, 4)), lambda X: np.ones(len(X))) == pytest.approx(1.0, abs=1e-15)
    for n in (10, 20, 40):
        assert integrate_tensor(TensorRule((n,)), lambda X: np.exp(X[:, 0])) == pytest.approx(math.exp(0.5), abs=1e-10)


def test_hermite_product_vanishes():
    # H_(1,3) integrates to zero once each factor is exact
    f = lambda X: eval_all(X[:, 0], 1)[:, 1] * eval_all(X[:, 1], 3)[:, 3]
    assert abs(integrate_tensor(TensorRule((1, 2)), f)) < 1e-15


def test_rule_validation_and_apply():
    with pytest.raises(DimensionMismatchError):
        IntegrationRule(np.zeros((3, 1)), np.ones(2))
    with pytest.raises(ValueError):
        IntegrationRule(np.zeros((1, 1)), np.ones(1), provenance="magic")
    r = tensor_integration_rule(TensorRule((4, 2)))
    assert len(r) == 8 and r.s == 2 and r.provenance == "tensor"
    assert r.apply(lambda X: X[:, 0] ** 2) == pytest.approx(1.0)


def test_reduced_rule_is_tensor_rule():
    spec = WeightSpec((1.0, 2.0), (1.0, 1.0), 0.5)
    plan = manual_plan(spec, 100.0, (6, 5))
    red = reduce_approximation(plan)
    ten = tensor_integration_rule(plan.tensor)
    assert red.provenance == "reduced_from_approximation"
    assert np.array_equal(red.weights, ten.weights) and np.array_equal(red.nodes, ten.nodes)
    d = red.derivation
    assert d["means"][0] == pytest.approx(1.0)
    assert d["max_abs_mean_nonzero"] < 1e-14
    assert d["max_beta_deviation"] < 1e-14
    assert red.apply(lambda X: np.ones(len(X))) == pytest.approx(1.0)


@pytest.mark.parametrize("orders", [(2,), (4,), (8,)])
def test_reduction_inequality_exp(orders):
    spec = WeightSpec((1.0,), (1.0,), 0.5)
    f = ExpLinear((1.0,)).unit(spec)
    plan = manual_plan(spec, 20.0, orders)
    err = exact_l2_error(run(plan, f), f.truth(), plan.index_set)
    red = reduce_approximation(plan)
    assert abs(f.integral() - red.apply(f)) <= err + 1e-10


def test_integration_no_harder_than_approximation():
    # the smallest 1-D rule integrating exp(x) to eps never exceeds the recipe's n
    spec = WeightSpec((1.0,), (1.0,), 0.5)
    f = ExpLinear((1.0,)).unit(spec)
    for eps in (1e-1, 1e-3, 1e-6):
        n_int = next(n for n in range(1, 200) if abs(integrate_tensor(TensorRule((n,)), f) - f.integral()) <= eps)
        assert n_int <= exp_recipe(spec, eps).n


def test_zero_algorithm_initial_error():
    # A = 0 integrates f = 1 with error 1
    f = ExpLinear((0.0,))
    assert abs(f.integral() - 0.0) == 1.0


def test_reference_values():
    assert integral_reference(ExpLinear((0.5, 1.0))) == pytest.approx(math.exp(0.625))
    spec = WeightSpec((1.0,), (1.0,), 0.3)
    assert integral_reference(KernelSection(spec, (0.2,), scale=3.0)) == 3.0
    assert integral_reference(object()) is None

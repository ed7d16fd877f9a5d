import math

import numpy as np
import pytest
from scipy.stats import poisson
from hypothesis import given, settings, strategies as st

from hermite_spaces.errors import ConfigError, DimensionMismatchError, SpaceOverflowError
from hermite_spaces.quadrature import TensorRule, hermite_moments
from hermite_spaces.spectral import (
    ExpLinear,
    FiniteSeries,
    KernelSection,
    SpectralFunction,
    coefficients_exp_linear,
    exp_linear_caps,
    kernel_eval,
    l2_norm,
    space_norm,
    test_function_from_json as function_from_json,
)
from hermite_spaces.weights import WeightSpec


def test_spectral_function_basics():
    f = SpectralFunction.from_dict(2, {(1, 0): 2.0, (0, 0): 1.0, (0, 3): -0.5})
    assert [tuple(k) for k in f.indices] == [(0, 0), (0, 3), (1, 0)]
    assert f.get((0, 3)) == -0.5 and f.get((5, 5)) == 0.0
    assert f.max_degrees == (1, 3)
    assert l2_norm(f) == pytest.approx(math.sqrt(5.25))
    with pytest.raises(ValueError):
        SpectralFunction(1, np.array([[1], [1]]), np.array([1.0, 2.0]))
    with pytest.raises(DimensionMismatchError):
        SpectralFunction.from_dict(2, {(1,): 1.0})
    X = np.array([[0.5, -1.0], [2.0, 0.3]])
    # 1 + 2 x1 - 0.5 (x2^3 - 3 x2)/sqrt(6)
    ref = 1 + 2 * X[:, 0] - 0.5 * (X[:, 1] ** 3 - 3 * X[:, 1]) / math.sqrt(6)
    assert np.allclose(f(X), ref)


def test_csv_round_trip_is_exact():
    rng = np.random.default_rng(0)
    f = SpectralFunction.from_dict(3, {tuple(rng.integers(0, 9, 3)): float(rng.normal()) for _ in range(30)})
    g = SpectralFunction.from_csv(f.to_csv())
    assert np.array_equal(f.indices, g.indices) and np.array_equal(f.values, g.values)


def test_exp_linear_coefficients_closed_form():
    c = coefficients_exp_linear((0.5, -1.0), (6, 6))
    for (k1, k2), v in c.items():
        ref = math.exp(0.5 * 1.25) * 0.5**k1 * (-1.0) ** k2 / math.sqrt(math.factorial(k1) * math.factorial(k2))
        assert v == pytest.approx(ref, rel=1e-13)


def test_exp_linear_coefficients_vs_quadrature():
    lam = (0.7, 0.4)
    c = coefficients_exp_linear(lam, (8, 8))
    q = hermite_moments(TensorRule((40, 40)), lambda X: np.exp(X @ np.array(lam)), (8, 8))
    for k, v in c.items():
        assert q[k] == pytest.approx(v, abs=1e-14)


def test_exp_linear_truncation_tail():
    for lam in [(1.0,), (2.0, -0.5), (0.0, 3.0)]:
        caps = exp_linear_caps(lam, 1e-12)
        # dropped squared mass / ||f||^2 = 1 - prod_j P(Poisson(lam_j^2) <= cap_j)
        kept = math.prod(poisson.cdf(c, l * l) for c, l in zip(caps, lam))
        assert 1.0 - kept <= 1e-24 + 1e-15
        assert all(poisson.sf(c, l * l) <= 1e-24 / len(lam) for c, l in zip(caps, lam))
        assert all(c == 0 or poisson.sf(c - 1, l * l) > 1e-24 / len(lam) for c, l in zip(caps, lam))


def test_norm_identities():
    f = ExpLinear((1.0,))
    spec = WeightSpec((1.0,), (1.0,), 0.5)
    assert l2_norm(f.truth()) ** 2 == pytest.approx(math.e**2, rel=1e-13)
    assert space_norm(spec, f.truth()) ** 2 == pytest.approx(math.e**3, rel=1e-13)
    assert f.space_norm(spec) ** 2 == pytest.approx(math.e**3, rel=1e-14)
    assert f.integral() == pytest.approx(math.exp(0.5))
    u = f.unit(spec)
    assert u.space_norm(spec) == pytest.approx(1.0, rel=1e-14)


def test_space_norm_overflow():
    spec = WeightSpec((1.0,), (2.0,), 0.1)
    with pytest.raises(SpaceOverflowError):
        space_norm(spec, SpectralFunction.from_dict(1, {(30,): 1.0}))
    with pytest.raises(SpaceOverflowError):
        ExpLinear((1.0,)).space_norm(spec)


def test_finite_series_integral():
    s = SpectralFunction.from_dict(1, {(0,): 0.25, (3,): 1.0})
    f = FiniteSeries(s, scale=2.0)
    assert f.integral() == 0.5
    assert f.truth().get((3,)) == 2.0


def test_kernel_section_matches_series():
    spec = WeightSpec((1.0, 2.0), (1.0, 1.0), 0.5)
    f = KernelSection(spec, (0.5, -0.3))
    X = np.array([[0.1, 0.2], [-1.5, 2.0], [3.0, -0.4]])
    assert np.allclose(f(X), f.truth()(X), rtol=1e-11)
    # the squared norm of K(., y) is K(y, y)
    assert f.space_norm(spec) ** 2 == pytest.approx(f.kernel_diagonal(), rel=1e-13)
    assert space_norm(spec, f.truth()) ** 2 == pytest.approx(f.kernel_diagonal(), rel=1e-11)
    assert f.integral() == 1.0


def test_kernel_section_non_unit_b():
    spec = WeightSpec((1.0, 1.0), (1.0, 2.0), 0.4)
    f = KernelSection(spec, (0.2, 1.1))
    X = np.array([[0.0, 0.0], [1.0, -2.0]])
    assert np.allclose(f(X), f.truth()(X), rtol=1e-11)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(-2, 2), y=st.floats(-2, 2), omega=st.floats(0.1, 0.8))
def test_kernel_eval_mehler(x, y, omega):
    spec = WeightSpec((1.0,), (1.0,), omega)
    val, tail = kernel_eval(spec, [x], [y])
    rho = omega
    q = 1 - rho * rho
    ref = math.exp((2 * rho * x * y - rho * rho * (x * x + y * y)) / (2 * q)) / math.sqrt(q)
    assert abs(val - ref) <= tail + 1e-12
    assert tail <= 1e-12 * (1 + 1e-9)


def test_function_from_json():
    spec = WeightSpec((1.0, 1.0), (1.0, 1.0), 0.5)
    f = function_from_json({"kind": "exp_linear", "lambda": 0.5}, spec)
    assert f.lam == (0.5, 0.5)
    g = function_from_json({"kind": "kernel_section", "y": [0.1, 0.2], "normalize": True}, spec)
    assert g.space_norm(spec) == pytest.approx(1.0)
    h = function_from_json({"kind": "polynomial", "coeffs": [[0, 0, 1.0], [1, 2, 0.5]], "scale": 2}, spec)
    assert h.truth().get((1, 2)) == 1.0
    for bad in ({"kind": "nope"}, {"kind": "exp_linear", "lambda": [1, 2, 3]},
                {"kind": "polynomial", "coeffs": [[1, 2]]}, {"kind": "polynomial"}):
        with pytest.raises(ConfigError):
            function_from_json(bad, spec)

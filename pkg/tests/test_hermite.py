import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermite_spaces.errors import DimensionMismatchError
from hermite_spaces.hermite import (
    cramer_bound_margin,
    eval_all,
    eval_multi,
    linearize_product,
    recurrence_residual,
)


def test_low_degrees_closed_form():
    x = np.linspace(-3, 3, 13)
    t = eval_all(x, 4)
    assert np.allclose(t[:, 0], 1.0)
    assert np.allclose(t[:, 1], x)
    assert np.allclose(t[:, 2], (x**2 - 1) / math.sqrt(2), atol=1e-15)
    assert np.allclose(t[:, 3], (x**3 - 3 * x) / math.sqrt(6), atol=1e-15)
    assert np.allclose(t[:, 4], (x**4 - 6 * x**2 + 3) / math.sqrt(24), atol=1e-14)


def test_matches_numpy_hermite_e():
    x = np.array([-4.0, -0.7, 0.0, 1.3, 5.0])
    t = eval_all(x, 25)
    for k in range(26):
        c = np.zeros(k + 1)
        c[k] = 1.0
        ref = np.polynomial.hermite_e.hermeval(x, c) / math.sqrt(math.factorial(k))
        assert np.allclose(t[:, k], ref, rtol=1e-11, atol=1e-13)


def test_high_degree_against_mpmath():
    with mpmath.workdps(50):
        for x in (0.3, 2.5, 10.0):
            ref = mpmath.hermite(300, mpmath.mpf(x) / mpmath.sqrt(2)) * mpmath.power(2, -150)
            ref /= mpmath.sqrt(mpmath.factorial(300))
            assert eval_all(x, 300)[300] == pytest.approx(float(ref), rel=1e-10)


def test_shapes_and_errors():
    assert eval_all(0.5, 3).shape == (4,)
    assert eval_all(np.zeros((2, 3)), 5).shape == (2, 3, 6)
    with pytest.raises(ValueError):
        eval_all(0.0, -1)
    with pytest.raises(DimensionMismatchError):
        eval_multi([0.1, 0.2], [1])
    assert eval_multi([0.5, 2.0], [1, 2]) == pytest.approx(0.5 * (4 - 1) / math.sqrt(2))


def test_recurrence_residual_small():
    x = np.linspace(-6, 6, 41)
    t = eval_all(x, 60)
    assert recurrence_residual(x, t).max() < 1e-9 * np.abs(t).max()


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-12, 12), k=st.integers(0, 200))
def test_cramer_inequality(x, k):
    assert cramer_bound_margin(x, k) >= -1e-9


def test_orthonormality_by_quadrature():
    x, w = np.polynomial.hermite_e.hermegauss(40)
    w = w / w.sum()
    t = eval_all(x, 30)
    gram = (t * w[:, None]).T @ t
    assert np.allclose(gram, np.eye(31), atol=1e-12)


def _exact_linearization(h, v):
    # Exact rational coefficients of He_h He_v = sum_r r! C(h,r) C(v,r) He_{h+v-2r},
    # renormalized to H_k = He_k / sqrt(k!).
    out = {}
    for r in range(min(h, v) + 1):
        d = h + v - 2 * r
        c = mpmath.mpf(math.factorial(r) * math.comb(h, r) * math.comb(v, r))
        out[d] = c * mpmath.sqrt(mpmath.factorial(d)) / mpmath.sqrt(mpmath.factorial(h) * mpmath.factorial(v))
    return out


@pytest.mark.parametrize("h,v", [(0, 0), (1, 1), (2, 3), (7, 4), (15, 15), (30, 11)])
def test_linearization_coefficients_exact(h, v):
    e = linearize_product(h, v)
    ref = _exact_linearization(h, v)
    assert sorted(e.degrees) == sorted(ref)
    for d, c in e.terms:
        assert c == pytest.approx(float(ref[d]), rel=1e-12)


def test_linearization_small_case():
    # H_1^2 = x^2 = sqrt(2) H_2 + H_0
    e = linearize_product(1, 1)
    assert dict(e.terms) == pytest.approx({0: 1.0, 2: math.sqrt(2)})

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaugebeam.bessel import bessel_j, bessel_j_derivative, bessel_j_orders


def _oracle(n, x):
    with mpmath.workdps(40):
        return float(mpmath.besselj(n, x))


def test_trivial_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(5, 0.0) == 0.0


def test_first_maximum_of_j1():
    assert bessel_j(1, 1.8412) == pytest.approx(0.5819, abs=5e-5)
    assert bessel_j(1, 1.8412) == pytest.approx(_oracle(1, 1.8412), abs=1e-14)


@pytest.mark.parametrize("order", range(0, 12))
def test_against_high_precision_oracle(order):
    x = np.linspace(-50, 50, 401)
    got = bessel_j(order, x)
    want = np.array([_oracle(order, v) for v in x])
    assert np.max(np.abs(got - want)) <= 1e-12


def test_negative_order_symmetry():
    x = np.linspace(0.1, 30, 50)
    for n in range(1, 6):
        assert np.allclose(bessel_j(-n, x), (-1) ** n * bessel_j(n, x), atol=0, rtol=0)


def test_orders_stack_shape_and_scalar_return():
    out = bessel_j_orders(3, np.ones((2, 4)))
    assert out.shape == (4, 2, 4)
    assert isinstance(bessel_j(2, 3.0), float)


def test_derivative_vanishes_at_first_derivative_zero():
    z = float(mpmath.besseljzero(1, 1, derivative=1))
    assert abs(bessel_j_derivative(1, z)) < 1e-13


def test_rejects_non_integer_order_and_nonfinite():
    with pytest.raises(ValueError):
        bessel_j(0.5, 1.0)
    with pytest.raises(ValueError):
        bessel_j(1, np.inf)


@given(st.integers(0, 8), st.floats(-50, 50))
def test_recurrence_identity(n, x):
    # J_{n-1} + J_{n+1} = (2n/x) J_n
    if abs(x) < 1e-3:
        return
    lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
    assert lhs == pytest.approx(2 * n / x * bessel_j(n, x), abs=1e-11 * max(1, abs(2 * n / x)))

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ginprod.exactnum import ExactValue, to_float
from ginprod.moments import (
    UnsupportedModeError,
    a_exact,
    a_exact_m1,
    a_exact_m2,
    alpha_matrix,
    even_moment,
    gaussian_sign_moment,
    sign_moment,
)
from ginprod.weights import ProductSpec

import oracles


def num(v):
    return float(to_float(v))


@pytest.mark.parametrize("a,b", [(0, 1), (1, 0), (0, 3), (2, 1), (2, 3), (4, 1), (1, 4), (3, 6)])
def test_gaussian_sign_moment_against_quadrature(a, b):
    assert num(gaussian_sign_moment(a, b)) == pytest.approx(oracles.gaussian_sign_moment_quad(a, b), rel=1e-12)


def test_gaussian_sign_moment_first_value():
    assert gaussian_sign_moment(0, 1) == ExactValue.monomial(2, sqrtpi=1)


@given(st.integers(0, 12), st.integers(0, 12))
def test_gaussian_sign_moment_antisymmetric(a, b):
    assert gaussian_sign_moment(a, b) == -gaussian_sign_moment(b, a)


@given(st.integers(0, 10), st.integers(0, 10))
def test_even_total_degree_vanishes(a, b):
    if (a + b) % 2 == 0:
        assert sign_moment(ProductSpec(4, 2), a, b).is_zero()


@given(st.integers(0, 8), st.integers(0, 8), st.sampled_from([1, 2]))
def test_sign_moment_antisymmetric(a, b, m):
    spec = ProductSpec(4, m)
    assert sign_moment(spec, a, b) == -sign_moment(spec, b, a)


@pytest.mark.parametrize("nu", [0, 1, 2, 3])
@pytest.mark.parametrize("a,b", [(0, 1), (2, 1), (0, 3), (2, 5)])
def test_two_factor_moments_against_quadrature(nu, a, b):
    spec = ProductSpec(4, 2, (nu,))
    assert num(sign_moment(spec, a, b)) == pytest.approx(oracles.two_factor_sign_moment_quad(a, b, nu), rel=1e-9)


def test_single_factor_route_consistent():
    spec = ProductSpec(4, 1)
    for j in range(1, 4):
        for k in range(1, 4):
            via_a = a_exact_m1(j, k) * ExactValue.monomial(1, sqrt2=2 * j + 2 * k - 1)
            assert via_a == sign_moment(spec, 2 * j - 2, 2 * k - 1)


def test_arithmetic_form_of_two_factor_moments():
    for j in range(1, 5):
        for k in range(1, 5):
            assert {p for _, p in a_exact_m2(j, k).keys()} == {4}
            assert {p for _, p in a_exact_m2(j, k, 1).keys()} == {2}
            assert all(s == 0 for s, _ in a_exact_m2(j, k, 3).keys())


def test_numeric_moment_matches_exact():
    spec = ProductSpec(4, 2)
    for a, b in ((0, 1), (2, 3)):
        exact = num(sign_moment(spec, a, b))
        assert float(sign_moment(spec, a, b, "numeric")) == pytest.approx(exact, rel=1e-10)
        assert float(sign_moment(spec, a, b, "numeric", method="mellin-barnes")) == pytest.approx(exact, rel=1e-14)


def test_even_moment_is_total_weight():
    for m in (1, 2, 3):
        assert num(even_moment(ProductSpec(2, m), 1)) == pytest.approx((2 * math.pi) ** (m / 2), rel=1e-14)


def test_exact_unavailable_for_three_factors():
    with pytest.raises(UnsupportedModeError):
        a_exact(ProductSpec(4, 3), 1, 1)
    with pytest.raises(ValueError):
        a_exact_m2(0, 1)


def test_alpha_matrix_shape():
    am = alpha_matrix(ProductSpec(6, 2))
    assert am.rows == 3
    assert len(am.entries) == 3 and all(len(r) == 3 for r in am.entries)

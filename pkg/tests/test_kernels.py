import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ginprod.exactnum import to_float
from ginprod.kernels import (
    DensityGrid,
    a_moments,
    a_moments_meijer,
    complex_mass,
    density_complex,
    density_real,
    global_density,
    integrated_density_real,
    kernel_entries_complex,
    kernel_entries_real,
    local_density_origin,
    local_density_origin_complex,
    pfaffian,
    pre_kernel_real,
    pre_kernel_real_m1,
    two_point_real,
)
from ginprod.moments import UnsupportedModeError
from ginprod.probabilities import expected_reals
from ginprod.special import integrate
from ginprod.weights import ProductSpec, weight_wr

import oracles

# the m = 2 weight is log-singular at 0, so sample away from it
points = st.floats(0.05, 2.5) | st.floats(-2.5, -0.05)


@settings(max_examples=8, deadline=None)
@given(points, points, st.sampled_from([1, 2]))
def test_entries_antisymmetric(x, y, m):
    spec = ProductSpec(4, m)
    a, b = kernel_entries_real(spec, x, y), kernel_entries_real(spec, y, x)
    assert a.D == pytest.approx(-b.D, abs=1e-9)
    if x != y:
        assert a.I_tilde == pytest.approx(-b.I_tilde, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 3.0), st.sampled_from([(6, 1, ()), (4, 2, ()), (4, 2, (1,))]))
def test_real_density_even(x, case):
    N, m, nu = case
    grid = density_real(ProductSpec(N, m, nu), [x, -x])
    assert grid.values[0] == pytest.approx(grid.values[1], rel=1e-12)


def test_closed_form_single_factor_kernel():
    for N in (2, 5):
        for x, y in ((0.4, -1.2), (1.5, 0.7)):
            assert pre_kernel_real_m1(N, x, y) == pytest.approx(oracles.ginibre_pre_kernel(N, x, y), rel=1e-12)


def test_kernel_at_origin_two_by_two():
    assert float(pre_kernel_real(ProductSpec(2, 1), np.array([0.0]), 0.0)[0]) == pytest.approx(
        1 / math.sqrt(2 * math.pi), rel=1e-14)


@pytest.mark.parametrize("m,nu", [(1, ()), (2, ()), (2, (2,))])
def test_derivative_matches_closed_form(m, nu):
    # D(x, y) = -2 w(x) w(y) (x - y) sum_i (x y)^i / C_i
    spec = ProductSpec(4, m, nu)
    x, y = 0.6, -0.9
    C = [math.prod(2 * math.sqrt(2 * math.pi) * 2.0**-v * math.gamma(i + 1 + v) for v in spec.exponents)
         for i in range(spec.N - 1)]
    ref = -2 * float(weight_wr(spec, x)) * float(weight_wr(spec, y)) * (x - y) * sum(
        (x * y) ** i / C[i] for i in range(spec.N - 1))
    assert kernel_entries_real(spec, x, y).D == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("m", [1, 2])
def test_moment_vector_against_meijer(m):
    spec = ProductSpec(6, m)
    for y in (-1.3, 0.4, 2.2):
        quad = a_moments(spec, y, 6)
        ref = [float(v) for v in a_moments_meijer(m, y, 6)]
        assert np.allclose(quad, ref, rtol=1e-10, atol=1e-14)


def test_far_points_decouple():
    spec = ProductSpec(40, 1)
    rho = density_real(spec, [-2.5, 2.5]).values
    assert two_point_real(spec, -2.5, 2.5) == pytest.approx(rho[0] * rho[1], rel=1e-9)


def test_two_point_vanishes_on_diagonal():
    assert abs(two_point_real(ProductSpec(4, 2), 0.7, 0.7)) < 1e-9


def test_pfaffian_small_cases():
    a = np.array([[0, 2.0], [-2.0, 0]])
    assert pfaffian(a) == 2.0
    b = np.zeros((4, 4))
    b[0, 1], b[0, 2], b[0, 3], b[1, 2], b[1, 3], b[2, 3] = 1, 2, 3, 4, 5, 6
    b = b - b.T
    assert pfaffian(b) == pytest.approx(1 * 6 - 2 * 5 + 3 * 4)
    assert pfaffian(np.zeros((3, 3))) == 0.0


@pytest.mark.parametrize("N", [2, 4])
def test_real_mass_is_expected_count(N):
    spec = ProductSpec(N, 1)
    assert integrated_density_real(spec) == pytest.approx(float(to_float(expected_reals(spec))), abs=1e-10)


@pytest.mark.parametrize("m,N", [(1, 2), (1, 4), (2, 2)])
def test_complex_mass_is_remaining_count(m, N):
    spec = ProductSpec(N, m)
    assert complex_mass(spec) == pytest.approx(N - float(to_float(expected_reals(spec))), abs=1e-8)


def test_odd_size_kernel_rejected():
    with pytest.raises(ValueError):
        kernel_entries_real(ProductSpec(5, 1), 0.1, 0.2)


def test_complex_sector_restrictions():
    with pytest.raises(UnsupportedModeError):
        kernel_entries_complex(ProductSpec(4, 3), 0.1 + 0.2j, 0.3 + 0.1j)
    with pytest.raises(ValueError):
        density_complex(ProductSpec(4, 1), [0.5 - 0.1j])


def test_complex_entries_consistent_with_density():
    spec = ProductSpec(4, 2)
    z = 0.4 + 0.6j
    e = kernel_entries_complex(spec, z, z)
    # the diagonal kernel carries 2i (zbar - z) = 4y; the density (plane mass N - E) carries 2y
    rho = density_complex(spec, [z]).values[0]
    assert e.S == pytest.approx(2 * rho, rel=1e-10)


def test_local_limit_single_factor_is_flat():
    for x in (-2.0, 0.3, 4.0):
        assert local_density_origin(1, (), x) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-9)


def test_local_limit_matches_large_finite_size():
    assert local_density_origin(2, (0,), 1.0) == pytest.approx(density_real(ProductSpec(40, 2), [1.0]).values[0],
                                                            rel=1e-8)
    assert local_density_origin(2, (1,), 1.0) == pytest.approx(
        density_real(ProductSpec(40, 2, (1,)), [1.0]).values[0], rel=1e-8)


def test_local_complex_limit_matches_large_finite_size():
    z = 0.5 + 0.5j
    assert local_density_origin_complex(2, z) == pytest.approx(density_complex(ProductSpec(40, 2), [z]).values[0],
                                                               rel=1e-8)
    assert local_density_origin_complex(1, 0.3) == 0.0


def test_local_origin_singular_case():
    with pytest.raises(ValueError):
        local_density_origin(2, (0,), 0.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_global_laws_have_unit_mass(m):
    real, _ = integrate(lambda x: np.array([global_density(m, "real", v) for v in x]), 0.0, 1.0)
    assert 2 * real == pytest.approx(1.0, rel=1e-8)
    radial, _ = integrate(lambda r: np.array([2 * math.pi * v * global_density(m, "complex", v) for v in r]),
                          0.0, 1.0)
    assert radial == pytest.approx(1.0, rel=1e-8)


def test_global_law_edges():
    assert global_density(2, "real", 1.0) == 0.0
    assert global_density(2, "real", 0.0) == math.inf
    assert global_density(1, "real", 0.0) == 0.5
    assert global_density(1, "complex", 0.5) == pytest.approx(1 / math.pi)


def test_density_grid_serialisation():
    grid = density_real(ProductSpec(2, 1), [0.0, 0.5])
    rows = list(csv.reader(io.StringIO(grid.to_csv())))
    assert rows[0] == ["x", "value"]
    assert float(rows[2][0]) == 0.5 and float(rows[2][1]) == grid.values[1]
    data = json.loads(grid.dumps())
    assert data["abscissae"] == [0.0, 0.5] and data["kind"] == "real"
    c = DensityGrid([0.5 + 0.25j], [1.0], 2, 2, kind="complex")
    assert c.to_json()["abscissae"] == [[0.5, 0.25]]
    assert c.to_csv().splitlines()[1] == "0.5,0.25,1.0"
    with pytest.raises(ValueError):
        DensityGrid([0.0], [], 2, 1)

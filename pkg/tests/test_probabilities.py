import json
from pathlib import Path

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ginprod.exactnum import ExactValue, to_float
from ginprod.moments import UnsupportedModeError
from ginprod.probabilities import (
    IllConditionedError,
    expected_reals,
    expected_reals_from_moments,
    normalisation,
    pnull,
    prob_all_real,
    prob_all_real_direct,
    real_count_distribution,
)
from ginprod.weights import ProductSpec

import oracles

GOLDEN = Path(__file__).parent / "golden"


def num(v):
    return float(to_float(v))


@pytest.mark.parametrize("table", [1, 2])
def test_golden_square_tables(table):
    data = json.loads((GOLDEN / f"table{table}.json").read_text())
    for e in data["entries"]:
        spec = ProductSpec(e["N"], 2)
        got = real_count_distribution(spec).probabilities[e["k"]] if table == 1 else expected_reals(spec)
        assert got == ExactValue.parse(e["exact"])


def test_golden_rectangular_table():
    data = json.loads((GOLDEN / "table3.json").read_text())
    for e in data["entries"]:
        assert prob_all_real(ProductSpec(e["N"], 2, (e["nu"],))) == ExactValue.parse(e["exact"])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.sampled_from([(1, ()), (2, (0,)), (2, (1,)), (2, (2,)), (2, (3,))]))
def test_distribution_sums_to_one(N, mnu):
    m, nu = mnu
    assert real_count_distribution(ProductSpec(N, m, nu)).total() == 1


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 8), st.sampled_from([1, 2]), st.integers(0, 3))
def test_rescaled_route_matches_raw(N, m, nu):
    spec = ProductSpec(N, m, (nu,) if m == 2 else ())
    raw = real_count_distribution(spec).probabilities
    scaled = real_count_distribution(spec, route="rescaled").probabilities
    assert raw == scaled


@pytest.mark.parametrize("N", range(1, 9))
def test_direct_all_real_matches_generating_function(N):
    spec = ProductSpec(N, 2)
    assert prob_all_real_direct(spec) == prob_all_real(spec)


@pytest.mark.parametrize("N", range(2, 9))
def test_single_factor_all_real(N):
    assert num(prob_all_real(ProductSpec(N, 1))) == pytest.approx(oracles.ginibre_all_real(N), rel=1e-14)


def test_support_and_parity():
    assert sorted(real_count_distribution(ProductSpec(5, 2)).probabilities) == [1, 3, 5]
    assert sorted(real_count_distribution(ProductSpec(4, 1)).probabilities) == [0, 2, 4]
    assert real_count_distribution(ProductSpec(1, 2)).probabilities == {1: 1}


def test_probabilities_are_positive():
    for N in range(2, 10):
        for v in real_count_distribution(ProductSpec(N, 2)).probabilities.values():
            assert num(v) > 0


@pytest.mark.parametrize("N", range(2, 7))
def test_numeric_matches_exact(N):
    spec = ProductSpec(N, 2)
    exact = real_count_distribution(spec).floats()
    numeric = real_count_distribution(spec, "numeric").floats()
    for k in exact:
        assert numeric[k] == pytest.approx(exact[k], rel=1e-12, abs=1e-15)


def test_three_factor_numeric_normalised():
    dist = real_count_distribution(ProductSpec(4, 3), "numeric")
    assert abs(dist.total() - 1) < mpmath.mpf("1e-20")
    assert all(v > 0 for v in dist.probabilities.values())


def test_three_factor_exact_not_available():
    with pytest.raises(UnsupportedModeError):
        real_count_distribution(ProductSpec(4, 3))


def test_low_precision_condition_guard():
    with pytest.raises(IllConditionedError):
        real_count_distribution(ProductSpec(6, 3), "numeric", prec=53)


def test_expected_reals_paths():
    for N in range(1, 8):
        spec = ProductSpec(N, 2)
        assert expected_reals_from_moments(spec) == real_count_distribution(spec).mean()
    assert expected_reals(ProductSpec(1, 2)) == 1


def test_expected_reals_grows_with_factors():
    for N in range(2, 8):
        assert num(expected_reals(ProductSpec(N, 2))) > num(expected_reals(ProductSpec(N, 1)))


def test_normalisation_single_factor_small():
    # N = 1: 2^{-1/2} / Gamma(1/2)
    assert num(normalisation(ProductSpec(1, 1))) == pytest.approx(1 / (2**0.5 * 3.141592653589793**0.5))


def test_pnull_matches_distribution():
    spec = ProductSpec(6, 2)
    assert float(pnull(spec)) == pytest.approx(num(real_count_distribution(spec).probabilities[0]), rel=1e-15)
    with pytest.raises(ValueError):
        pnull(ProductSpec(5, 2))


def test_json_serialisation():
    data = real_count_distribution(ProductSpec(3, 2)).to_json()
    assert data["spec"] == {"N": 3, "m": 2, "nu": [0, 0, 0]}
    assert [e["k"] for e in data["entries"]] == [1, 3]
    assert ExactValue.parse(data["entries"][1]["exact"]).pretty() == "(5/32)*pi"

import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ginprod.montecarlo import (
    McConfig,
    SpectrumSample,
    estimate_distribution,
    factor_shapes,
    global_law_bin_average,
    histogram_real_global,
    l1_distance,
    philox4x32,
    sample_batch,
    sample_factors,
    sample_spectrum,
    wilson_interval,
)
from ginprod.probabilities import real_count_distribution
from ginprod.weights import ProductSpec


@pytest.mark.parametrize("counter,key,expected", [
    ([0, 0, 0, 0], [0, 0], [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]),
    ([0xFFFFFFFF] * 4, [0xFFFFFFFF] * 2, [0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD]),
    ([0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344], [0xA4093822, 0x299F31D0],
     [0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1]),
])
def test_philox_known_answers(counter, key, expected):
    out = philox4x32(np.array([counter], dtype=np.uint32), key)
    assert [int(v) for v in out[0]] == expected


def test_config_validation():
    spec = ProductSpec(3, 2)
    for bad in (dict(samples=0), dict(workers=0), dict(seed=-1), dict(entry_law="uniform")):
        kwargs = dict(spec=spec, samples=10, seed=1)
        kwargs.update(bad)
        with pytest.raises(ValueError):
            McConfig(**kwargs)


def test_factor_shapes_rectangular():
    assert factor_shapes(ProductSpec(3, 2, (1,))) == [(3, 4), (4, 3)]
    mats = sample_factors(McConfig(ProductSpec(3, 2, (1,)), 4, seed=5), [0, 1])
    assert [m.shape for m in mats] == [(2, 3, 4), (2, 4, 3)]


def test_gaussian_entries_moments():
    vals = sample_factors(McConfig(ProductSpec(30, 1), 200, seed=11), np.arange(200))[0].ravel()
    assert abs(vals.mean()) < 5 / math.sqrt(vals.size)
    assert vals.var() == pytest.approx(1.0, abs=5 * math.sqrt(2 / vals.size))


def test_sign_entries():
    vals = sample_factors(McConfig(ProductSpec(9, 1), 50, seed=3, entry_law="rademacher"), np.arange(50))[0]
    assert set(np.unique(vals)) == {-1.0, 1.0}
    assert abs(vals.mean()) < 5 / math.sqrt(vals.size)


def test_sample_reproducible_by_index():
    cfg = McConfig(ProductSpec(5, 2), 100, seed=42)
    batch = sample_batch(cfg, 10, 20)
    for offset, s in enumerate(batch):
        again = sample_spectrum(cfg, 10 + offset)
        assert again.reals == s.reals and again.complex_pairs == s.complex_pairs


def test_sample_index_range():
    with pytest.raises(IndexError):
        sample_spectrum(McConfig(ProductSpec(3, 1), 5, seed=1), 5)


def test_workers_and_chunks_do_not_change_counts():
    spec = ProductSpec(4, 2)
    one = estimate_distribution(McConfig(spec, 3000, seed=9))
    many = estimate_distribution(McConfig(spec, 3000, seed=9, workers=3, chunk=700))
    assert one.counts == many.counts
    assert one.trace_sq_sum == pytest.approx(many.trace_sq_sum, rel=1e-12)


def test_seed_changes_stream():
    spec = ProductSpec(4, 2)
    a = estimate_distribution(McConfig(spec, 2000, seed=1))
    b = estimate_distribution(McConfig(spec, 2000, seed=2))
    assert a.counts != b.counts


def test_one_by_one_is_real():
    emp = estimate_distribution(McConfig(ProductSpec(1, 3), 500, seed=4))
    assert emp.counts == {1: 500}


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 7), st.integers(1, 3), st.integers(0, 2**40))
def test_real_count_parity(N, m, seed):
    emp = estimate_distribution(McConfig(ProductSpec(N, m), 50, seed=seed))
    assert all(k % 2 == N % 2 for k in emp.counts)
    assert sum(emp.frequencies().values()) == pytest.approx(1.0)


def test_spectrum_sample_size():
    assert SpectrumSample([0.1], [(0.0, 1.0)], 0.0).N == 3


@pytest.mark.parametrize("m", [1, 2, 3])
def test_trace_of_square_mean(m):
    # E tr P^2 = N^m for products of square Gaussian factors
    N = 4
    emp = estimate_distribution(McConfig(ProductSpec(N, m), 20000, seed=13))
    mean, se = emp.mean_trace_sq()
    assert abs(mean - N**m) < 4 * se


def test_trace_matches_eigenvalues():
    s = sample_spectrum(McConfig(ProductSpec(6, 2), 10, seed=8), 3)
    from_ev = sum(x * x for x in s.reals) + sum(2 * (a * a - b * b) for a, b in s.complex_pairs)
    assert from_ev == pytest.approx(s.trace_sq, rel=1e-9)


def test_real_count_matches_schur():
    cfg = McConfig(ProductSpec(7, 2), 200, seed=21)
    mats = sample_factors(cfg, np.arange(200))
    prods = mats[0] @ mats[1]
    samples = sample_batch(cfg, 0, 200)
    for p, s in zip(prods, samples):
        T, _ = scipy.linalg.schur(p, output="real")
        sub = np.abs(np.diag(T, -1)) > 0
        blocks_2x2 = int(np.count_nonzero(sub))
        assert len(s.reals) == p.shape[0] - 2 * blocks_2x2


def test_frequencies_agree_with_exact_small_case():
    emp = estimate_distribution(McConfig(ProductSpec(3, 2), 40000, seed=77))
    exact = real_count_distribution(ProductSpec(3, 2)).floats()
    for k in (1, 3):
        lo, hi = emp.interval(k)
        assert lo <= exact[k] <= hi


def test_wilson_interval_properties():
    lo, hi = wilson_interval(500, 1000)
    assert lo < 0.5 < hi
    assert hi - 0.5 == pytest.approx(0.5 - lo)
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0
    narrow = wilson_interval(500, 1000, z=1.0)
    assert narrow[1] - narrow[0] < hi - lo
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_empirical_json_layout():
    emp = estimate_distribution(McConfig(ProductSpec(2, 2), 100, seed=1))
    data = json.loads(emp.dumps())
    assert set(data["counts"]) == {"0", "2"}
    row = data["counts"]["2"]
    assert row["ci_low"] <= row["frequency"] <= row["ci_high"]
    assert data["counts"]["0"]["count"] + row["count"] == 100


def test_bin_average_of_limiting_law():
    edges = np.linspace(-1.5, 1.5, 31)
    avg = global_law_bin_average(2, edges)
    assert np.sum(avg * np.diff(edges)) == pytest.approx(1.0)
    assert np.all(avg[np.abs(0.5 * (edges[1:] + edges[:-1])) > 1.0] == 0)


def test_flat_histogram_single_factor():
    hist = histogram_real_global(McConfig(ProductSpec(256, 1), 20, seed=6), bins=30)
    centres = np.array(hist.abscissae)
    inner = np.abs(centres) < 0.9
    # individual bins carry about +-0.045 noise at this size; their mean does not
    assert np.mean(np.array(hist.values)[inner]) == pytest.approx(0.5, abs=0.05)
    assert hist.meta["total_reals"] > 0


def test_l1_distance_zero_against_itself():
    hist = histogram_real_global(McConfig(ProductSpec(64, 2), 10, seed=2), bins=30)
    assert l1_distance(hist, hist) == 0.0
    assert 0 < l1_distance(hist) < 1

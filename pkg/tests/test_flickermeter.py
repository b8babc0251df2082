import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vfirec.flickermeter import (
    CALIBRATION_DV,
    CALIBRATION_HZ,
    PERCENTILES,
    FlickerResult,
    PinstSeries,
    compute_pinst,
    compute_pst,
    exceedance_level,
    perceptibility_gain,
    pst,
    write_pinst_csv,
)
from vfirec.signal_io import ModulationSpec, ParameterError, SampledWaveform, synthesize_am

PST_WEIGHTS = {0.1: 0.0314, "1s": 0.0525, "3s": 0.0657, "10s": 0.28, "50s": 0.08}


def am(kind, a, rate, duration=600.0, fs=4000.0):
    return synthesize_am(230.0, 50.0, fs, ModulationSpec(kind, a, rate, duration))


def oracle_level(samples, x):
    """Smallest sample value exceeded by no more than x percent of the samples."""
    n = len(samples)
    return min(v for v in samples if sum(1 for s in samples if s > v) <= x * n / 100.0)


def oracle_pst(pct):
    p1s = (pct[0.7] + pct[1.0] + pct[1.5]) / 3
    p3s = (pct[2.2] + pct[3.0] + pct[4.0]) / 3
    p10s = (pct[6.0] + pct[8.0] + pct[10.0] + pct[13.0] + pct[17.0]) / 5
    p50s = (pct[30.0] + pct[50.0] + pct[80.0]) / 3
    return math.sqrt(PST_WEIGHTS[0.1] * pct[0.1] + PST_WEIGHTS["1s"] * p1s
                     + PST_WEIGHTS["3s"] * p3s + PST_WEIGHTS["10s"] * p10s
                     + PST_WEIGHTS["50s"] * p50s)


@pytest.fixture(scope="module")
def calibration_pinst():
    w = am("sinusoidal", CALIBRATION_DV, CALIBRATION_HZ, duration=60.0, fs=20000.0)
    return w, compute_pinst(w)


def test_calibration_point(calibration_pinst):
    _, p = calibration_pinst
    assert p.settled().max() == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("fs", [2000.0, 6400.0])
def test_calibration_other_input_rates(fs):
    p = compute_pinst(am("sinusoidal", CALIBRATION_DV, CALIBRATION_HZ, duration=40.0, fs=fs))
    assert p.settled().max() == pytest.approx(1.0, abs=0.05)


def test_unmodulated_sine_is_quiet():
    p = compute_pinst(am("none", 0.0, 0.0, duration=60.0, fs=20000.0))
    assert p.dt == 0.02
    assert p.settled().max() <= 1e-3


def test_scale_by_two(calibration_pinst):
    w, p = calibration_pinst
    p2 = compute_pinst(SampledWaveform(2.0 * w.samples, w.rate, w.u_nominal, w.carrier_hz))
    np.testing.assert_allclose(p2.values, p.values, rtol=1e-6, atol=1e-9)


def test_gain_is_positive_and_cached():
    assert perceptibility_gain() == perceptibility_gain() > 0


def test_short_input_rejected():
    with pytest.raises(ParameterError):
        compute_pinst(am("none", 0.0, 0.0, duration=5.0))


def test_short_series_rejected():
    with pytest.raises(ParameterError):
        compute_pst(PinstSeries(np.zeros(1000)))
    assert compute_pst(PinstSeries(np.zeros(2000)), None).p_st == 0.0


def test_all_zero_pinst():
    res = compute_pst(PinstSeries(np.zeros(30000)))
    assert res.p_st == 0.0
    assert set(res.percentiles.values()) == {0.0}


def test_uniform_series_percentiles():
    n = 30000
    vals = np.random.default_rng(0).permutation(np.arange(1, n + 1, dtype=float))
    res = compute_pst(PinstSeries(vals, settle_skip=0.0))
    for x in PERCENTILES:
        assert res.percentiles[x] == n - math.floor(x * n / 100)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 50.0), min_size=1, max_size=200))
def test_exceedance_matches_sort_oracle(values):
    desc = np.sort(np.array(values))[::-1]
    for x in PERCENTILES:
        assert exceedance_level(desc, x) == oracle_level(values, x)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), min_size=20, max_size=300))
def test_pst_formula(values):
    res = compute_pst(PinstSeries(np.array(values), settle_skip=0.0), None)
    pct = {x: oracle_level(values, x) for x in PERCENTILES}
    assert res.percentiles == pct
    assert res.p_st == pytest.approx(oracle_pst(pct), rel=1e-12)
    levels = [res.percentiles[x] for x in PERCENTILES]
    assert all(a >= b for a, b in zip(levels, levels[1:]))


def test_compliance_1620_cpm():
    assert pst(am("rectangular", 0.00402, 1620.0)).p_st == pytest.approx(1.0, abs=0.05)


def test_amplitude_doubling_is_linear():
    base = pst(am("rectangular", 0.004, 110.0)).p_st
    double = pst(am("rectangular", 0.008, 110.0)).p_st
    assert double == pytest.approx(2 * base, rel=0.05)


@pytest.mark.parametrize("cpm", [7.0, 1620.0])
def test_monotone_in_amplitude(cpm):
    values = [pst(am("rectangular", a, cpm)).p_st for a in (0.001, 0.003, 0.01, 0.03)]
    assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("offset", [0.37, 13.1])
def test_time_shift(offset):
    ref = pst(am("rectangular", 0.01, 39.0)).p_st
    long = am("rectangular", 0.01, 39.0, duration=600.0 + offset)
    start = int(round(offset * long.rate))
    shifted = SampledWaveform(long.samples[start:], long.rate, 230.0, 50.0)
    assert pst(shifted).p_st == pytest.approx(ref, rel=0.01)


def test_result_serialization(tmp_path):
    res = compute_pst(PinstSeries(np.linspace(0, 2, 30000)))
    d = json.loads(res.to_json())
    assert d["p_st"] == res.p_st
    assert list(d["percentiles"]) == [f"{x:g}" for x in PERCENTILES]
    assert isinstance(res, FlickerResult)
    p = PinstSeries(np.ones(100))
    write_pinst_csv(p, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,value"

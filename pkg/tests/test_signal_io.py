import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from vfirec.signal_io import (
    ModulationSpec,
    ParameterError,
    SampledWaveform,
    WaveformDataError,
    WaveformFormatError,
    load_waveform,
    modulation_envelope,
    save_waveform,
    synthesize_am,
)
from vfirec.vfi import compute_rms_series

finite_volts = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite_volts, min_size=40, max_size=400))
def test_raw_roundtrip_bit_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("raw") / "w.f64"
    w = SampledWaveform(np.array(values), 2000.0, 230.0, 50.0)
    save_waveform(w, path, "raw_f64")
    back = load_waveform(path, "raw_f64")
    assert back == w
    assert back.samples.tobytes() == w.samples.tobytes()


@settings(max_examples=40, deadline=None)
@given(st.lists(finite_volts, min_size=100, max_size=400),
       st.floats(2000.0, 5000.0), st.floats(1.0, 1000.0))
def test_csv_roundtrip(tmp_path_factory, values, rate, u_nominal):
    path = tmp_path_factory.mktemp("csv") / "w.csv"
    w = SampledWaveform(np.array(values), rate, u_nominal, 50.0)
    save_waveform(w, path, "csv")
    back = load_waveform(path, "csv")
    assert back.rate == pytest.approx(rate, rel=1e-12)
    assert back.u_nominal == pytest.approx(u_nominal, rel=1e-12)
    np.testing.assert_allclose(back.samples, w.samples, rtol=1e-12, atol=0)


def test_empty_file_is_format_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(WaveformFormatError):
        load_waveform(path, "csv")


def test_header_only_is_format_error(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("# rate=2000 u_nominal=230 carrier=50\n")
    with pytest.raises(WaveformFormatError):
        load_waveform(path, "csv")


@pytest.mark.parametrize("header", ["# rate=2000 carrier=50", "rate=2000 u_nominal=230 carrier=50",
                                    "# rate=abc u_nominal=230 carrier=50"])
def test_bad_header(tmp_path, header):
    path = tmp_path / "bad.csv"
    path.write_text(header + "\n" + "\n".join(["1.0"] * 50) + "\n")
    with pytest.raises(WaveformFormatError):
        load_waveform(path, "csv")


def test_nan_reports_index(tmp_path):
    samples = np.sin(np.arange(100) / 10.0)
    samples[7] = np.nan
    lines = ["# rate=2000 u_nominal=230 carrier=50"] + [repr(x) for x in samples.tolist()]
    path = tmp_path / "nan.csv"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(WaveformDataError, match="index 7") as info:
        load_waveform(path, "csv")
    assert info.value.index == 7


def test_raw_nan_and_missing_sidecar(tmp_path):
    samples = np.ones(100)
    samples[7] = np.inf
    path = tmp_path / "x.f64"
    path.write_bytes(samples.astype("<f8").tobytes())
    with pytest.raises(WaveformFormatError, match="sidecar"):
        load_waveform(path, "raw_f64")
    (tmp_path / "x.meta.json").write_text(json.dumps({"rate": 2000, "u_nominal": 230, "carrier": 50}))
    with pytest.raises(WaveformDataError) as info:
        load_waveform(path, "raw_f64")
    assert info.value.index == 7


def test_invariants_rejected():
    with pytest.raises(ParameterError):
        SampledWaveform(np.ones(1000), 1000.0, 230.0, 50.0)  # < 40 samples per cycle
    with pytest.raises(ParameterError):
        SampledWaveform(np.ones(10), 2000.0, 230.0, 50.0)  # shorter than a cycle
    with pytest.raises(ParameterError):
        SampledWaveform(np.ones(100), 2000.0, 0.0, 50.0)
    with pytest.raises(ParameterError):
        synthesize_am(230.0, 50.0, 1999.0, ModulationSpec("none", duration_s=1.0))
    with pytest.raises(ParameterError):
        ModulationSpec("triangle")
    with pytest.raises(ParameterError):
        ModulationSpec("rectangular", -0.1, 10.0)


@pytest.mark.slow
def test_twelve_million_sample_csv(tmp_path):
    w = synthesize_am(230.0, 50.0, 20000.0, ModulationSpec("rectangular", 0.01, 39.0, 600.0))
    path = save_waveform(w, tmp_path / "big.csv", "csv")
    back = load_waveform(path, "csv")
    assert back.samples.size == 12_000_000
    assert back.rate == 20000.0 and back.u_nominal == 230.0
    np.testing.assert_array_equal(back.samples, w.samples)


@pytest.mark.parametrize("rate", [2000.0, 4000.0, 20000.0])
def test_unmodulated_rms_is_constant(rate):
    w = synthesize_am(230.0, 50.0, rate, ModulationSpec("none", duration_s=5.0))
    rms = compute_rms_series(w)
    np.testing.assert_allclose(rms.values, 230.0, rtol=1e-9)


def _cycle_rms_oracle(level_of_t, f_c, t0, t1):
    # RMS of the continuous waveform by adaptive quadrature
    val, _ = integrate.quad(lambda t: (math.sqrt(2) * level_of_t(t) * math.sin(2 * math.pi * f_c * t)) ** 2,
                            t0, t1, epsabs=1e-10, epsrel=1e-12, limit=200)
    return math.sqrt(val / (t1 - t0))


def test_rectangular_levels_differ_by_closed_form():
    mod = ModulationSpec("rectangular", 0.01, 39.0, 10.0)
    w = synthesize_am(230.0, 50.0, 20000.0, mod)
    rms = compute_rms_series(w).values
    levels = np.unique(np.round(rms, 6))
    assert levels.size == 2
    assert levels[1] - levels[0] == pytest.approx(2.3, abs=1e-6)
    # each half cycle matches the continuous-time RMS of its level
    for k in (0, 153, 154, 300, 999):
        t0 = k * 0.01
        m = modulation_envelope(np.array([t0 + 0.005]), mod, 50.0)[0]
        oracle = _cycle_rms_oracle(lambda t: 230.0 * (1 + m), 50.0, t0, t0 + 0.01)
        assert rms[k] == pytest.approx(oracle, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.1), st.sampled_from([30.0, 60.0, 120.0, 300.0, 600.0, 1200.0]),
       st.floats(1.0, 12.0))
def test_rectangular_energy_matches_closed_form(a, cpm, duration):
    duration = round(duration / 0.01) * 0.01
    w = synthesize_am(230.0, 50.0, 4000.0, ModulationSpec("rectangular", a, cpm, duration))
    energy = float(np.sum(w.samples ** 2)) / w.rate
    half = 60.0 / cpm
    n_full = int(duration // half)
    seg = [half] * n_full + [duration - n_full * half]
    lev = [(1 - a / 2) if j % 2 == 0 else (1 + a / 2) for j in range(len(seg))]
    expected = 230.0 ** 2 * sum(s * l * l for s, l in zip(seg, lev))
    assert energy == pytest.approx(expected, rel=1e-9)


def test_sinusoidal_and_ramp_envelopes():
    t = np.linspace(0, 10, 10001)
    m = modulation_envelope(t, ModulationSpec("sinusoidal", 0.0025, 8.8, 10.0), 50.0)
    assert m.max() - m.min() == pytest.approx(0.0025, rel=1e-5)
    m = modulation_envelope(t, ModulationSpec("ramp", 0.02, 6.0, 10.0), 50.0)
    assert m.max() - m.min() == pytest.approx(0.02, rel=1e-9)
    m = modulation_envelope(t, ModulationSpec("ramp", 0.02, 0.0, 10.0), 50.0)
    assert np.all(np.diff(m) > 0)


def test_scaled_waveform():
    w = synthesize_am(230.0, 50.0, 2000.0, ModulationSpec("none", duration_s=1.0))
    s = w.scaled(2.0)
    assert s.u_nominal == 460.0
    np.testing.assert_array_equal(s.samples, 2.0 * w.samples)

"""IEC 61000-4-15 flickermeter (230 V / 50 Hz lamp model).

Block layout follows the standard:

1. input adaptor -- normalizes by the running mean square (tau = 27.3 s),
2. squaring demodulator,
3. 0.05 Hz high-pass, 35 Hz 6th-order Butterworth low-pass and the
   lamp-eye weighting filter,
4. squaring and 300 ms first-order smoothing, scaled to the perceptibility
   threshold (P_inst = 1),
5. statistical classifier producing P_st from exceedance percentiles.

The squared signal is decimated to 2 kHz before filtering.  Classification
uses an exact sort of the P_inst samples instead of histogram classes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import signal

from .signal_io import ParameterError

INTERNAL_RATE = 2000.0
PINST_DT = 0.02
SETTLE_S = 20.0
MIN_INPUT_S = 30.0
PST_WINDOW_S = 600.0

ADAPTOR_TAU = 27.3
SMOOTHING_TAU = 0.3
HIGHPASS_HZ = 0.05
LOWPASS_HZ = 35.0
LOWPASS_ORDER = 6

# lamp-eye-brain weighting filter, 230 V / 60 W lamp on a 50 Hz grid
WEIGHT_K = 1.74802
WEIGHT_LAMBDA = 2 * np.pi * 4.05981
WEIGHT_W1 = 2 * np.pi * 9.15494
WEIGHT_W2 = 2 * np.pi * 2.27979
WEIGHT_W3 = 2 * np.pi * 1.22535
WEIGHT_W4 = 2 * np.pi * 21.9

# sinusoidal fluctuation giving max P_inst = 1
CALIBRATION_HZ = 8.8
CALIBRATION_DV = 0.0025

PERCENTILES = (0.1, 0.7, 1.0, 1.5, 2.2, 3.0, 4.0, 6.0, 8.0, 10.0, 13.0, 17.0, 30.0, 50.0, 80.0)


@dataclass(frozen=True)
class PinstSeries:
    values: np.ndarray = field(repr=False)
    dt: float = PINST_DT
    settle_skip: float = SETTLE_S

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if values.ndim != 1 or np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParameterError("P_inst values must be a finite, non-negative 1-D array")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def duration(self):
        return self.values.size * self.dt

    def settled(self):
        """Samples after the settling interval."""
        return self.values[int(round(self.settle_skip / self.dt)):]

    def times(self):
        return self.dt * np.arange(self.values.size)


@dataclass(frozen=True)
class FlickerResult:
    p_st: float
    percentiles: dict

    def to_dict(self):
        return {"p_st": self.p_st,
                "percentiles": {f"{k:g}": v for k, v in self.percentiles.items()}}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _lowpass_sos(tau, fs):
    b, a = signal.bilinear([1.0], [tau, 1.0], fs)
    return signal.tf2sos(b, a)


def _weighting_sos(fs):
    zeros = [0.0, -WEIGHT_W2]
    disc = np.sqrt(complex(WEIGHT_LAMBDA ** 2 - WEIGHT_W1 ** 2))
    poles = [-WEIGHT_LAMBDA + disc, -WEIGHT_LAMBDA - disc, -WEIGHT_W3, -WEIGHT_W4]
    gain = WEIGHT_K * WEIGHT_W1 * WEIGHT_W3 * WEIGHT_W4 / WEIGHT_W2
    z, p, k = signal.bilinear_zpk(zeros, poles, gain, fs)
    return signal.zpk2sos(z, p, k)


@lru_cache(maxsize=None)
def _filters(fs):
    hp = signal.butter(1, HIGHPASS_HZ, "highpass", fs=fs, output="sos")
    lp = signal.butter(LOWPASS_ORDER, LOWPASS_HZ, "lowpass", fs=fs, output="sos")
    return {
        "adaptor": _lowpass_sos(ADAPTOR_TAU, fs),
        "band": np.vstack([hp, lp]),
        "weight": _weighting_sos(fs),
        "smooth": _lowpass_sos(SMOOTHING_TAU, fs),
    }


def _gain_at(sos, f, fs):
    _, h = signal.sosfreqz(sos, worN=[f], fs=fs)
    return abs(h[0])


@lru_cache(maxsize=None)
def perceptibility_gain(fs=INTERNAL_RATE):
    """Block-4 scale factor making the calibration fluctuation peak at P_inst = 1.

    After normalization the calibration signal carries a relative fluctuation
    of amplitude dV/V at 8.8 Hz.  Squaring it yields a mean of A^2/2 plus a
    2f ripple of the same size attenuated by the smoothing filter; the peak
    is their sum.
    """
    flt = _filters(fs)
    g = (_gain_at(flt["band"], CALIBRATION_HZ, fs)
         * _gain_at(flt["weight"], CALIBRATION_HZ, fs))
    amp = CALIBRATION_DV * g
    ripple = _gain_at(flt["smooth"], 2 * CALIBRATION_HZ, fs)
    return 1.0 / (amp ** 2 / 2.0 * (1.0 + ripple))


def _sosfilt_steady(sos, x):
    """Filter with state pre-set to the steady state of a constant x[0] input."""
    zi = signal.sosfilt_zi(sos) * x[0]
    y, _ = signal.sosfilt(sos, x, zi=zi)
    return y


def _to_internal_rate(x, rate):
    ratio = Fraction(INTERNAL_RATE) / Fraction(rate).limit_denominator(10 ** 6)
    if ratio == 1:
        return x
    return signal.resample_poly(x, ratio.numerator, ratio.denominator, padtype="mean")


def compute_pinst(w, settle_skip=SETTLE_S):
    """Instantaneous flicker sensation sampled every 20 ms."""
    if w.duration < MIN_INPUT_S:
        raise ParameterError(
            f"input of {w.duration:g} s is shorter than {MIN_INPUT_S:g} s needed to settle")
    fs = INTERNAL_RATE
    flt = _filters(fs)
    demod = _to_internal_rate(np.square(w.samples), w.rate)

    head = demod[:int(fs)]
    level = head.mean()
    if level <= 0:
        return PinstSeries(np.zeros(demod.size // int(round(PINST_DT * fs))), PINST_DT, settle_skip)
    mean_sq = signal.sosfilt(flt["adaptor"], demod,
                             zi=signal.sosfilt_zi(flt["adaptor"]) * level)[0]
    x = demod / np.maximum(mean_sq, np.finfo(float).tiny)

    x = _sosfilt_steady(flt["band"], x)
    x = _sosfilt_steady(flt["weight"], x)
    x = np.square(x)
    x = _sosfilt_steady(flt["smooth"], x) * perceptibility_gain(fs)

    step = int(round(PINST_DT * fs))
    values = np.maximum(x[step - 1::step], 0.0)
    return PinstSeries(values, PINST_DT, settle_skip)


def exceedance_level(sorted_desc, x):
    """Smallest sample value exceeded by at most ``x`` percent of samples."""
    n = sorted_desc.size
    k = int(math.floor(x * n / 100.0))
    return float(sorted_desc[min(k, n - 1)])


def compute_pst(p, window_s=PST_WINDOW_S):
    """Short-term flicker severity from a P_inst series.

    ``window_s`` is the required record length (settling included); pass
    ``None`` to accept any length.
    """
    if window_s is not None and p.duration < window_s - p.dt / 2:
        raise ParameterError(
            f"P_inst series covers {p.duration:g} s; {window_s:g} s required")
    stats = p.settled()
    if stats.size == 0:
        raise ParameterError("no P_inst samples after the settling interval")
    desc = np.sort(stats)[::-1]
    pct = {x: exceedance_level(desc, x) for x in PERCENTILES}
    p50s = (pct[30.0] + pct[50.0] + pct[80.0]) / 3
    p10s = (pct[6.0] + pct[8.0] + pct[10.0] + pct[13.0] + pct[17.0]) / 5
    p3s = (pct[2.2] + pct[3.0] + pct[4.0]) / 3
    p1s = (pct[0.7] + pct[1.0] + pct[1.5]) / 3
    p_st = math.sqrt(0.0314 * pct[0.1] + 0.0525 * p1s + 0.0657 * p3s
                     + 0.28 * p10s + 0.08 * p50s)
    return FlickerResult(p_st, pct)


def pst(w, window_s=PST_WINDOW_S):
    return compute_pst(compute_pinst(w), window_s)


def write_pinst_csv(p, path):
    np.savetxt(path, np.column_stack([p.times(), p.values]), delimiter=",",
               header="t,value", comments="", fmt="%.9g")

"""Seeded synthetic corpora of amplitude-modulated test signals."""

from __future__ import annotations

import numpy as np

from .signal_io import ModulationSpec, SampledWaveform, carrier, synthesize_am


def random_walk_square_am(seed, duration=60.0, rate=4000.0, u_nominal=230.0, carrier_hz=50.0,
                          cpm_range=(30.0, 400.0), max_step_range=(0.006, 0.03),
                          min_step_frac=0.15, band=0.05, min_gap=0.06):
    """Rectangular modulation whose level performs a bounded random walk.

    Switching instants form a Poisson process (gaps at least ``min_gap``
    seconds) snapped to carrier zero crossings.  Each switch moves the
    relative level by a uniform step in ``[min_step_frac, 1] * max_step`` with
    a random sign, reflected to stay within ``1 +/- band``.
    """
    rng = np.random.default_rng(seed)
    cpm = rng.uniform(*cpm_range)
    max_step = rng.uniform(*max_step_range)
    half_cycle = 1.0 / (2.0 * carrier_hz)

    n_draw = int(duration * cpm / 60.0 * 2) + 5
    gaps = np.maximum(rng.exponential(60.0 / cpm, n_draw), min_gap)
    switches = np.round(np.cumsum(gaps) / half_cycle) * half_cycle
    switches = np.unique(switches[switches < duration])

    levels = [1.0]
    for _ in range(switches.size):
        step = rng.uniform(min_step_frac * max_step, max_step)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        if abs(levels[-1] + sign * step - 1.0) > band:
            sign = -sign
        levels.append(levels[-1] + sign * step)
    levels = np.asarray(levels)

    t = np.arange(int(round(duration * rate))) / rate
    idx = np.searchsorted(switches, t + 1e-9 * half_cycle, side="right")
    u = u_nominal * levels[idx] * carrier(t, carrier_hz)
    return SampledWaveform(u, rate, u_nominal, carrier_hz)


def random_square_spec(rng, duration=600.0, cpm_range=(2.0, 1000.0), amp_range=(0.002, 0.03)):
    """Rectangular modulation with log-uniform rate and uniform dV/V."""
    cpm = float(np.exp(rng.uniform(np.log(cpm_range[0]), np.log(cpm_range[1]))))
    amp = float(rng.uniform(*amp_range))
    return ModulationSpec("rectangular", amp, cpm, duration)


def square_am_corpus(n, seed=0, duration=600.0, rate=4000.0, u_nominal=230.0, carrier_hz=50.0,
                     **spec_kwargs):
    """``{signal_id: waveform}`` of ``n`` random rectangular-modulation signals."""
    rng = np.random.default_rng(seed)
    return {
        f"sq{i:03d}": synthesize_am(u_nominal, carrier_hz, rate,
                                    random_square_spec(rng, duration, **spec_kwargs))
        for i in range(n)
    }

"""Recreate RMS level trajectories from VFI records and resynthesize voltage.

Three methods are available:

``M1``
    instantaneous steps (square-wave amplitude modulation),
``M2``
    linear ramps at a constant speed of ``sr_const_rel * delta_U`` volts/s,
``M3``
    linear ramps whose speeds are drawn from a gamma distribution.

All methods place the changes evenly over the window in random order and keep
the level inside ``[u_min, u_max]`` while oscillating around ``u_avg``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .signal_io import MIN_SAMPLES_PER_CYCLE, ParameterError, SampledWaveform, carrier

log = logging.getLogger(__name__)

METHODS = ("M1", "M2", "M3")

# representative delta_V / delta_U per subrange; three-way subranges split
# their count into equal thirds with the remainder on the middle value
REPRESENTATIVE_RATIOS = (
    (1.0,),
    (0.85,),
    (0.75,),
    (0.69, 0.60, 0.50),
    (0.49, 0.40, 0.30),
    (0.29, 0.20, 0.10),
    (0.09, 0.05, 0.01),
)

_BOUND_TOL = 1e-12
# breakpoints closer than this fraction of the window are merged
_TIME_RES = 1e-9


class RecreationError(ValueError):
    """VFI record cannot be recreated (inconsistent bounds or amplitude)."""


@dataclass(frozen=True)
class RecreationParams:
    method: str = "M1"
    seed: int = 0
    sr_const_rel: float = 3.0
    gamma_shape: float = 1.0
    gamma_scale: float = 300.0
    min_speed_rel_un: float = 0.01
    u_nominal: float = 230.0
    step_duration: float = 0.01

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not (self.sr_const_rel > 0 and self.gamma_shape > 0 and self.gamma_scale > 0):
            raise ParameterError("sr_const_rel, gamma_shape and gamma_scale must be positive")
        if self.min_speed_rel_un < 0:
            raise ParameterError("min_speed_rel_un must be non-negative")
        if not (self.u_nominal > 0 and self.step_duration > 0):
            raise ParameterError("u_nominal and step_duration must be positive")


@dataclass(frozen=True)
class RecreationWarning:
    window_index: int
    change_index: int
    reason: str


@dataclass(frozen=True)
class LevelTrajectory:
    """Piecewise-linear RMS level over ``[0, span]``."""

    times: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)
    span: float
    warnings: tuple = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        levels = np.asarray(self.levels, dtype=np.float64)
        if times.shape != levels.shape or times.ndim != 1 or times.size < 1:
            raise ParameterError("times and levels must be equal-length 1-D arrays")
        if np.any(np.diff(times) <= 0):
            raise ParameterError("breakpoint times must be strictly increasing")
        if not np.all(np.isfinite(levels)):
            raise ParameterError("levels must be finite")
        times.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def breakpoints(self):
        return list(zip(self.times.tolist(), self.levels.tolist()))

    def level_at(self, t):
        return np.interp(t, self.times, self.levels)

    def n_changes(self):
        """Number of level changes (ramps or steps) between breakpoints."""
        return int(np.count_nonzero(np.diff(self.levels)))


def representative_amplitudes(v):
    """One representative amplitude (volts) per counted change, bin by bin."""
    out = []
    for n, ratios in zip(v.counts, REPRESENTATIVE_RATIOS):
        if len(ratios) == 1:
            out.extend([ratios[0]] * n)
        else:
            q, r = divmod(n, 3)
            hi, mid, lo = ratios
            out.extend([hi] * q + [mid] * (q + r) + [lo] * q)
    return [ratio * v.delta_u for ratio in out]


def make_rng(seed):
    """Counter-based generator; one independent stream per seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _check_record(v):
    try:
        v.validate()
    except ParameterError as exc:
        raise RecreationError(str(exc)) from None


def build_trajectory(v, p):
    """Recreate the RMS level trajectory of one discrimination window."""
    _check_record(v)
    u_min, u_max, u_avg, t_w = v.u_min, v.u_max, v.u_avg, v.t_w
    amps = np.asarray(representative_amplitudes(v), dtype=np.float64)
    n = amps.size
    if n == 0:
        return LevelTrajectory([0.0, t_w], [u_avg, u_avg], t_w)

    rng = make_rng(p.seed)
    amps = amps[rng.permutation(n)]
    if p.method == "M3":
        speeds_pct = rng.gamma(p.gamma_shape, p.gamma_scale, size=n)
    slot = t_w / n
    tol = _BOUND_TOL * max(abs(u_max), 1.0)
    min_speed = p.min_speed_rel_un * p.u_nominal
    t_eps = _TIME_RES * t_w

    times, levels, warnings = [0.0], [u_avg], []
    level = u_avg
    for i, amp in enumerate(amps):
        if level > u_avg:
            pref = -1.0
        elif level < u_avg:
            pref = 1.0
        else:
            pref = 1.0 if rng.integers(2) else -1.0
        new = None
        for sign in (pref, -pref):
            cand = level + sign * amp
            if u_min - tol <= cand <= u_max + tol:
                new = min(max(cand, u_min), u_max)
                break
        if new is None:
            room_up, room_dn = u_max - level, level - u_min
            if room_up > room_dn or (room_up == room_dn and pref > 0):
                new = u_max
            else:
                new = u_min
            warnings.append(RecreationWarning(
                v.window_index, i,
                f"amplitude {amp:.6g} V infeasible at level {level:.6g} V; "
                f"clamped to {abs(new - level):.6g} V"))
        actual = abs(new - level)

        if p.method == "M1":
            d = p.step_duration
        elif p.method == "M2":
            d = actual / (p.sr_const_rel * v.delta_u)
        else:
            speed = max(speeds_pct[i] / 100.0 * v.delta_u, min_speed)
            d = actual / speed
        d = min(d, slot)

        center = (i + 0.5) * slot
        t_a = center - d / 2
        t_b = min(center + d / 2, t_w)
        if t_a > times[-1] + t_eps:
            times.append(t_a)
            levels.append(level)
        # keep breakpoints distinguishable after shifting by a window offset
        t_b = max(t_b, times[-1] + t_eps)
        times.append(t_b)
        levels.append(new)
        level = new
    if t_w > times[-1] + t_eps:
        times.append(t_w)
        levels.append(level)
    else:
        times[-1] = t_w

    levels_arr = np.asarray(levels)
    assert np.all((levels_arr >= u_min) & (levels_arr <= u_max)), "level left [u_min, u_max]"
    for w in warnings:
        log.info("window %d change %d: %s", w.window_index, w.change_index, w.reason)
    return LevelTrajectory(times, levels_arr, t_w, warnings)


def concatenate(trajectories, join_duration=0.01):
    """Join per-window trajectories end to end.

    The level generally jumps at a window edge (each window starts at its own
    ``u_avg``); the jump is drawn as a ramp of ``join_duration`` seconds
    starting at the edge.
    """
    times, levels, warnings = [], [], []
    offset = 0.0
    for traj in trajectories:
        t = traj.times + offset
        lv = traj.levels
        if times:
            if lv[0] == levels[-1]:
                t, lv = t[1:], lv[1:]
            elif t.size > 1 and t[1] > offset + join_duration:
                t = t.copy()
                t[0] = offset + join_duration
            else:
                t, lv = t[1:], lv[1:]
        times.extend(t.tolist())
        levels.extend(lv.tolist())
        warnings.extend(traj.warnings)
        offset += traj.span
    return LevelTrajectory(times, levels, offset, warnings)


def synthesize_from_trajectory(traj, carrier_hz, rate, u_nominal=None):
    """u(t) = sqrt(2) * L(t) * sin(2*pi*f_c*t), L interpolated linearly."""
    if rate < MIN_SAMPLES_PER_CYCLE * carrier_hz:
        raise ParameterError(
            f"rate {rate} Hz is below {MIN_SAMPLES_PER_CYCLE} x carrier ({carrier_hz} Hz)")
    n = int(round(traj.span * rate))
    t = np.arange(n) / rate
    u = traj.level_at(t) * carrier(t, carrier_hz)
    if u_nominal is None:
        u_nominal = float(traj.levels[0])
    return SampledWaveform(u, rate, u_nominal, carrier_hz)


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("t", "level"))
        for t, lv in traj.breakpoints:
            writer.writerow((repr(t), repr(lv)))


def read_trajectory_csv(path, span=None):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times, levels = data[:, 0], data[:, 1]
    return LevelTrajectory(times, levels, float(times[-1]) if span is None else span)


def write_warnings_csv(warnings, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("window_index", "change_index", "reason"))
        for w in warnings:
            writer.writerow((w.window_index, w.change_index, w.reason))

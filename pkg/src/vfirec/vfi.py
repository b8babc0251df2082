"""Voltage fluctuation indices from a half-cycle RMS series.

Pipeline: :func:`compute_rms_series` -> :func:`detect_changes` ->
:func:`aggregate_vfi`.  Everything here is deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .signal_io import ParameterError

BIN_LABELS = ("f10_09", "f09_08", "f08_07", "f07_05", "f05_03", "f03_01", "f01_00")
# lower edges of the delta_V/delta_U subranges; bin k holds lower[k] <= r < lower[k-1]
BIN_LOWER_EDGES = (0.9, 0.8, 0.7, 0.5, 0.3, 0.1, 0.0)
# ratios within this relative distance below an edge count as on the edge
BIN_EDGE_TOL = 1e-6

DEFAULT_SR_THRESHOLD = 0.01
HYSTERESIS_REL = 1e-4
PLATEAU_MIN_SAMPLES = 3
FLAT_TOL_REL = 1e-11

VFI_CSV_COLUMNS = ("window_index", "t_w", "u_min", "u_max", "u_avg", "delta_u") + BIN_LABELS


@dataclass(frozen=True)
class RmsSeries:
    """RMS values; value ``k`` covers ``[t0 + k*dt, t0 + (k+1)*dt)``."""

    values: np.ndarray = field(repr=False)
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ParameterError("RMS values must be one-dimensional")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ParameterError("RMS values must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def duration(self):
        return self.values.size * self.dt

    def times(self):
        return self.t0 + self.dt * np.arange(self.values.size)


@dataclass(frozen=True)
class ChangeEvent:
    t_start: float
    t_end: float
    v_start: float
    v_end: float

    @property
    def amplitude(self):
        return abs(self.v_end - self.v_start)

    @property
    def duration(self):
        return self.t_end - self.t_start

    @property
    def speed(self):
        return self.amplitude / self.duration

    @property
    def sign(self):
        return 1 if self.v_end > self.v_start else -1


@dataclass(frozen=True)
class VfiRecord:
    window_index: int
    t_w: float
    u_min: float
    u_max: float
    u_avg: float
    delta_u: float
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 7 or any(c < 0 for c in counts):
            raise ParameterError("counts must be 7 non-negative integers")
        object.__setattr__(self, "counts", counts)

    @property
    def n_changes(self):
        return sum(self.counts)

    def rates_per_minute(self):
        """Subrange counts expressed as changes per minute."""
        return tuple(c * 60.0 / self.t_w for c in self.counts)

    def validate(self):
        """Raise :class:`ParameterError` if the record is not self-consistent."""
        vals = (self.t_w, self.u_min, self.u_max, self.u_avg, self.delta_u)
        if not all(np.isfinite(vals)):
            raise ParameterError(f"window {self.window_index}: non-finite field")
        if not self.t_w > 0:
            raise ParameterError(f"window {self.window_index}: t_w must be positive")
        if self.u_max < self.u_min:
            raise ParameterError(f"window {self.window_index}: u_max < u_min")
        if not self.u_min <= self.u_avg <= self.u_max:
            raise ParameterError(f"window {self.window_index}: u_avg outside [u_min, u_max]")
        if self.delta_u < 0:
            raise ParameterError(f"window {self.window_index}: negative delta_u")
        # the range is a difference of two voltages; allow its rounding error
        if self.delta_u > self.u_max - self.u_min + 1e-12 * max(abs(self.u_max), 1.0):
            raise ParameterError(
                f"window {self.window_index}: delta_u {self.delta_u:g} exceeds "
                f"u_max - u_min = {self.u_max - self.u_min:g}")
        if self.n_changes and self.delta_u == 0:
            raise ParameterError(f"window {self.window_index}: changes counted but delta_u = 0")
        return self


def compute_rms_series(w):
    """Non-overlapping RMS over consecutive half carrier cycles."""
    spc = w.rate / (2.0 * w.carrier_hz)
    n = int(np.floor(w.samples.size / spc + 1e-9))
    if n < 1:
        raise ParameterError("waveform is shorter than one half-cycle")
    edges = np.round(np.arange(n + 1) * spc).astype(np.int64)
    edges[-1] = min(edges[-1], w.samples.size)
    sq = np.square(w.samples)
    sums = np.add.reduceat(sq, edges[:-1])
    # reduceat's last segment runs to the array end; trim it to its edge
    tail = w.samples.size - edges[-1]
    if tail:
        sums[-1] -= sq[edges[-1]:].sum()
    values = np.sqrt(np.maximum(sums, 0.0) / np.diff(edges))
    return RmsSeries(values, dt=1.0 / (2.0 * w.carrier_hz), t0=0.0)


def _zigzag(values, h):
    """Indices of turning points; reversals of ``h`` or less are ignored."""
    n = values.size
    turns = [0]
    direction = 0
    ext_i = 0
    for i in range(1, n):
        v = values[i]
        if direction == 0:
            if v - values[0] > h:
                direction, ext_i = 1, i
            elif values[0] - v > h:
                direction, ext_i = -1, i
        elif direction > 0:
            if v >= values[ext_i]:
                ext_i = i
            elif values[ext_i] - v > h:
                turns.append(ext_i)
                direction, ext_i = -1, i
        else:
            if v <= values[ext_i]:
                ext_i = i
            elif v - values[ext_i] > h:
                turns.append(ext_i)
                direction, ext_i = 1, i
    if direction != 0 and ext_i != turns[-1]:
        turns.append(ext_i)
    if turns[-1] != n - 1:
        turns.append(n - 1)
    return turns


def _plateaus(values, tol):
    """(first, last) sample index of every run of >= PLATEAU_MIN_SAMPLES equal values."""
    flat = np.abs(np.diff(values)) <= tol
    if not flat.any():
        return []
    padded = np.concatenate(([False], flat, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    keep = (ends - starts) >= PLATEAU_MIN_SAMPLES - 1
    return list(zip(starts[keep], ends[keep]))


def _monotone_runs(values, h, tol):
    """Yield (i, j) sample-index pairs of monotone runs between boundaries."""
    n = values.size
    segments = []
    pos = 0
    for a, b in _plateaus(values, tol):
        if a > pos:
            segments.append((pos, a))
        pos = b
    if pos < n - 1:
        segments.append((pos, n - 1))
    for lo, hi in segments:
        turns = _zigzag(values[lo:hi + 1], h)
        for a, b in zip(turns[:-1], turns[1:]):
            i, j = lo + a, lo + b
            # trim flat samples at both ends so the run spans only the change
            while i < j and abs(values[i + 1] - values[i]) <= tol:
                i += 1
            while j > i and abs(values[j] - values[j - 1]) <= tol:
                j -= 1
            if j > i:
                yield i, j


def detect_changes(rms, u_nominal, sr_threshold_rel=DEFAULT_SR_THRESHOLD,
                   hysteresis_rel=HYSTERESIS_REL):
    """Split the RMS series into monotone runs and keep those fast enough.

    A run from sample ``i`` to sample ``j`` starts at the end of sample ``i``
    and ends at the start of sample ``j`` (at least one refresh interval
    later).  It qualifies when its amplitude exceeds the hysteresis band and
    its mean speed reaches ``sr_threshold_rel * u_nominal`` volts per second.
    """
    if not sr_threshold_rel > 0:
        raise ParameterError("sr_threshold_rel must be positive")
    if not u_nominal > 0:
        raise ParameterError("u_nominal must be positive")
    values = rms.values
    if values.size < 2:
        return []
    threshold = sr_threshold_rel * u_nominal
    h = hysteresis_rel * u_nominal
    tol = FLAT_TOL_REL * u_nominal
    events = []
    for i, j in _monotone_runs(values, h, tol):
        amplitude = abs(values[j] - values[i])
        if amplitude <= h:
            continue
        t_start = float(rms.t0 + (i + 1) * rms.dt)
        t_end = float(max(rms.t0 + j * rms.dt, t_start + rms.dt))
        if amplitude / (t_end - t_start) >= threshold:
            events.append(ChangeEvent(t_start, t_end, float(values[i]), float(values[j])))
    return events


def subrange_index(ratio):
    """Subrange (0..6) of a delta_V/delta_U ratio in (0, 1]."""
    for k, lower in enumerate(BIN_LOWER_EDGES[:-1]):
        if ratio >= lower * (1.0 - BIN_EDGE_TOL):
            return k
    return len(BIN_LOWER_EDGES) - 1


def bin_counts(amplitudes):
    """Return (delta_u, counts) for a collection of change amplitudes."""
    amplitudes = [a for a in amplitudes]
    counts = [0] * 7
    if not amplitudes:
        return 0.0, tuple(counts)
    delta_u = max(amplitudes)
    for a in amplitudes:
        counts[subrange_index(a / delta_u)] += 1
    return float(delta_u), tuple(counts)


def aggregate_vfi(rms, events, t_w):
    """One :class:`VfiRecord` per full discrimination window of ``t_w`` seconds.

    Events go to the window containing their start.  ``u_min``/``u_max`` are
    widened to the endpoint levels of assigned events so that a change that
    straddles the window edge still fits the reported range.
    """
    if not t_w > 0:
        raise ParameterError("t_w must be positive")
    per_window = t_w / rms.dt
    n_per = int(round(per_window))
    if abs(per_window - n_per) > 1e-6 * max(per_window, 1.0) or n_per < 1:
        raise ParameterError(f"t_w = {t_w} s is not a whole number of RMS intervals")
    n_windows = rms.values.size // n_per
    if n_windows < 1:
        raise ParameterError(f"t_w = {t_w} s is longer than the series ({rms.duration:g} s)")

    assigned = [[] for _ in range(n_windows)]
    for ev in events:
        k = int(np.floor((ev.t_start - rms.t0) / t_w + 1e-9))
        if 0 <= k < n_windows:
            assigned[k].append(ev)

    records = []
    for k in range(n_windows):
        chunk = rms.values[k * n_per:(k + 1) * n_per]
        evs = assigned[k]
        u_min = float(chunk.min())
        u_max = float(chunk.max())
        if evs:
            ends = [v for ev in evs for v in (ev.v_start, ev.v_end)]
            u_min = min(u_min, min(ends))
            u_max = max(u_max, max(ends))
        u_avg = float(min(max(chunk.mean(), u_min), u_max))
        delta_u, counts = bin_counts(ev.amplitude for ev in evs)
        records.append(VfiRecord(k, float(t_w), u_min, u_max, u_avg, delta_u, counts))
    return records


def compute_vfi(w, t_w, sr_threshold_rel=DEFAULT_SR_THRESHOLD):
    """Convenience wrapper running the whole chain on a waveform."""
    rms = compute_rms_series(w)
    events = detect_changes(rms, w.u_nominal, sr_threshold_rel)
    return aggregate_vfi(rms, events, t_w)


def write_vfi_csv(records, path):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VFI_CSV_COLUMNS)
        for r in records:
            writer.writerow([r.window_index, repr(r.t_w), repr(r.u_min), repr(r.u_max),
                             repr(r.u_avg), repr(r.delta_u), *r.counts])


def read_vfi_csv(path):
    records = []
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        missing = set(VFI_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ParameterError(f"{path}: missing columns {sorted(missing)}")
        for line, row in enumerate(reader, start=2):
            try:
                records.append(VfiRecord(
                    int(row["window_index"]), float(row["t_w"]), float(row["u_min"]),
                    float(row["u_max"]), float(row["u_avg"]), float(row["delta_u"]),
                    tuple(int(row[c]) for c in BIN_LABELS)))
            except (TypeError, ValueError) as exc:
                raise ParameterError(f"{path}:{line}: {exc}") from None
    return records

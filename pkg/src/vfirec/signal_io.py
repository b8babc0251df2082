"""Sampled voltage waveforms: container, file formats and test-signal synthesis.

Two on-disk formats are supported:

* ``csv`` -- a header line ``# rate=<Hz> u_nominal=<V> carrier=<Hz>`` followed
  by one voltage sample per line.
* ``raw_f64`` -- little-endian float64 samples plus a ``<name>.meta.json``
  sidecar holding ``rate``, ``u_nominal`` and ``carrier``.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MIN_SAMPLES_PER_CYCLE = 40
MODULATION_KINDS = ("rectangular", "sinusoidal", "ramp", "none")

_HEADER_RE = re.compile(r"([a-z_]+)\s*=\s*([^\s]+)")


class WaveformFormatError(ValueError):
    """File layout or metadata is missing or malformed."""


class WaveformDataError(ValueError):
    """Sample values are unusable (e.g. non-finite)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ParameterError(ValueError):
    """Parameter combination violates a documented precondition."""


@dataclass(frozen=True)
class SampledWaveform:
    samples: np.ndarray = field(repr=False)
    rate: float
    u_nominal: float
    carrier_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if not (self.rate > 0 and self.carrier_hz > 0):
            raise ParameterError("rate and carrier_hz must be positive")
        if self.rate < MIN_SAMPLES_PER_CYCLE * self.carrier_hz:
            raise ParameterError(
                f"rate {self.rate} Hz is below {MIN_SAMPLES_PER_CYCLE} x carrier "
                f"({self.carrier_hz} Hz)"
            )
        if not self.u_nominal > 0:
            raise ParameterError("u_nominal must be positive")
        if samples.size < math.ceil(self.rate / self.carrier_hz):
            raise ParameterError("waveform is shorter than one carrier cycle")

    @property
    def duration(self):
        return self.samples.size / self.rate

    def scaled(self, factor):
        """Return a copy with samples and ``u_nominal`` multiplied by ``factor``."""
        return SampledWaveform(self.samples * factor, self.rate,
                               self.u_nominal * factor, self.carrier_hz)

    def __eq__(self, other):
        if not isinstance(other, SampledWaveform):
            return NotImplemented
        return (self.rate == other.rate and self.u_nominal == other.u_nominal
                and self.carrier_hz == other.carrier_hz
                and np.array_equal(self.samples, other.samples))

    __hash__ = None


@dataclass(frozen=True)
class ModulationSpec:
    """Amplitude modulation of a test signal.

    ``rel_amplitude`` is the peak-to-peak relative voltage change dV/V.
    ``rate_cpm`` means changes per minute for ``rectangular`` and ``ramp``
    modulation and the modulating frequency in Hz for ``sinusoidal``.
    """

    kind: str
    rel_amplitude: float = 0.0
    rate_cpm: float = 0.0
    duration_s: float = 600.0

    def __post_init__(self):
        if self.kind not in MODULATION_KINDS:
            raise ParameterError(f"unknown modulation kind {self.kind!r}")
        if self.rel_amplitude < 0 or self.rate_cpm < 0:
            raise ParameterError("rel_amplitude and rate_cpm must be non-negative")
        if not self.duration_s > 0:
            raise ParameterError("duration_s must be positive")


def _parse_metadata(mapping, source):
    try:
        rate = float(mapping["rate"])
        u_nominal = float(mapping["u_nominal"])
        carrier = float(mapping["carrier"])
    except KeyError as exc:
        raise WaveformFormatError(f"{source}: missing metadata key {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise WaveformFormatError(f"{source}: metadata values must be numeric") from None
    if not all(math.isfinite(v) for v in (rate, u_nominal, carrier)):
        raise WaveformFormatError(f"{source}: metadata values must be finite")
    return rate, u_nominal, carrier


def _check_finite(samples, source):
    bad = np.flatnonzero(~np.isfinite(samples))
    if bad.size:
        raise WaveformDataError(
            f"{source}: non-finite sample at index {bad[0]}", index=int(bad[0]))


def _build(samples, rate, u_nominal, carrier, source):
    try:
        return SampledWaveform(samples, rate, u_nominal, carrier)
    except ParameterError as exc:
        raise WaveformFormatError(f"{source}: {exc}") from None


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def load_waveform(path, format="csv"):
    """Read a waveform written in ``csv`` or ``raw_f64`` format."""
    path = Path(path)
    if format == "csv":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline()
            if not header.strip():
                raise WaveformFormatError(f"{path}: empty file")
            if not header.startswith("#"):
                raise WaveformFormatError(f"{path}: first line must be a '# rate=...' header")
            meta = dict(_HEADER_RE.findall(header[1:]))
            rate, u_nominal, carrier = _parse_metadata(meta, path)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)  # empty body handled below
                    samples = np.loadtxt(fh, dtype=np.float64, ndmin=1)
            except ValueError as exc:
                raise WaveformFormatError(f"{path}: unparsable sample ({exc})") from None
    elif format == "raw_f64":
        meta_path = sidecar_path(path)
        if not meta_path.exists():
            raise WaveformFormatError(f"{path}: sidecar {meta_path.name} not found")
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as exc:
            raise WaveformFormatError(f"{meta_path}: invalid JSON ({exc})") from None
        rate, u_nominal, carrier = _parse_metadata(meta, meta_path)
        raw = path.read_bytes()
        if not raw:
            raise WaveformFormatError(f"{path}: empty file")
        if len(raw) % 8:
            raise WaveformFormatError(f"{path}: size is not a multiple of 8 bytes")
        samples = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    else:
        raise WaveformFormatError(f"unknown waveform format {format!r}")
    if samples.size == 0:
        raise WaveformFormatError(f"{path}: no samples")
    _check_finite(samples, path)
    return _build(samples, rate, u_nominal, carrier, path)


def save_waveform(w, path, format="csv"):
    path = Path(path)
    if format == "csv":
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# rate={w.rate!r} u_nominal={w.u_nominal!r} carrier={w.carrier_hz!r}\n")
            # repr-precision floats round-trip exactly
            fh.write("\n".join(map(repr, w.samples.tolist())))
            fh.write("\n")
    elif format == "raw_f64":
        path.write_bytes(w.samples.astype("<f8").tobytes())
        meta = {"rate": w.rate, "u_nominal": w.u_nominal, "carrier": w.carrier_hz}
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    else:
        raise WaveformFormatError(f"unknown waveform format {format!r}")
    return path


def format_from_path(path):
    """Guess the waveform format from a file suffix (``.csv`` or anything else)."""
    return "csv" if Path(path).suffix.lower() == ".csv" else "raw_f64"


def _rectangular(t, mod, carrier_hz):
    a = mod.rel_amplitude
    if mod.rate_cpm == 0:
        return np.full_like(t, -a / 2)
    half = 60.0 / mod.rate_cpm
    half_cycle = 1.0 / (2.0 * carrier_hz)
    # switch instants snapped to carrier zero crossings
    n_switch = int(np.floor(t[-1] / half)) + 1
    switches = np.round(np.arange(1, n_switch + 1) * half / half_cycle) * half_cycle
    # zero crossings computed from a sample index can fall one ulp early
    n_before = np.searchsorted(switches, t + 1e-9 * half_cycle, side="right")
    return np.where(n_before % 2 == 0, -a / 2, a / 2)


def _ramp(t, mod):
    a = mod.rel_amplitude
    if mod.rate_cpm == 0:
        return a * (t / mod.duration_s - 0.5)
    half = 60.0 / mod.rate_cpm
    phase = np.mod(t / half, 2.0)
    tri = np.where(phase < 1.0, phase, 2.0 - phase)
    return a * (tri - 0.5)


def modulation_envelope(t, mod, carrier_hz):
    """Relative modulation m(t) with peak-to-peak excursion ``mod.rel_amplitude``."""
    t = np.asarray(t, dtype=np.float64)
    if mod.kind == "none" or mod.rel_amplitude == 0:
        return np.zeros_like(t)
    if mod.kind == "sinusoidal":
        return 0.5 * mod.rel_amplitude * np.sin(2 * np.pi * mod.rate_cpm * t)
    if mod.kind == "rectangular":
        return _rectangular(t, mod, carrier_hz)
    return _ramp(t, mod)


def carrier(t, carrier_hz):
    return np.sqrt(2.0) * np.sin(2 * np.pi * carrier_hz * t)


def synthesize_am(u_nominal, carrier_hz, rate, mod):
    """Sinusoidal carrier of RMS ``u_nominal`` amplitude-modulated by ``mod``.

    u(t) = sqrt(2) * U_N * (1 + m(t)) * sin(2*pi*f_c*t)
    """
    if rate < MIN_SAMPLES_PER_CYCLE * carrier_hz:
        raise ParameterError(
            f"rate {rate} Hz is below {MIN_SAMPLES_PER_CYCLE} x carrier ({carrier_hz} Hz)")
    n = int(round(mod.duration_s * rate))
    t = np.arange(n) / rate
    m = modulation_envelope(t, mod, carrier_hz)
    u = u_nominal * (1.0 + m) * carrier(t, carrier_hz)
    return SampledWaveform(u, rate, u_nominal, carrier_hz)

"""Adapter turning third-party voltage recordings into ``csv``/``raw_f64`` files.

The published measurement dataset is distributed as per-measurement-point
files whose exact layout is not fixed here.  The adapter accepts the common
containers (delimited text, ``.npy``, MATLAB ``.mat``) and writes one
waveform per voltage channel, so the rest of the toolkit only ever sees the
two native formats.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .signal_io import SampledWaveform, WaveformFormatError, save_waveform

SUPPORTED_SUFFIXES = (".csv", ".txt", ".tsv", ".npy", ".mat")


def _read_text(path, columns, skip_header):
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        first = fh.readline()
    delimiter = "," if "," in first else ("\t" if "\t" in first else None)
    data = np.genfromtxt(path, delimiter=delimiter, skip_header=skip_header, ndmin=2)
    if data.size == 0:
        raise WaveformFormatError(f"{path}: no numeric data")
    return data if columns is None else data[:, list(columns)]


def _read_mat(path, variable):
    from scipy.io import loadmat

    mat = loadmat(path)
    names = [k for k in mat if not k.startswith("__")]
    if variable is None:
        arrays = [k for k in names if np.asarray(mat[k]).size > 1]
        if len(arrays) != 1:
            raise WaveformFormatError(
                f"{path}: choose one variable among {sorted(arrays)}")
        variable = arrays[0]
    if variable not in mat:
        raise WaveformFormatError(f"{path}: variable {variable!r} not found")
    data = np.asarray(mat[variable], dtype=np.float64)
    return data if data.ndim == 2 else data.reshape(-1, 1)


def read_channels(path, columns=None, variable=None, skip_header=0):
    """2-D array (samples x channels) from a recording file."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".csv", ".txt", ".tsv"):
        data = _read_text(path, columns, skip_header)
    elif suffix == ".npy":
        data = np.load(path)
        data = data.reshape(-1, 1) if data.ndim == 1 else data
    elif suffix == ".mat":
        data = _read_mat(path, variable)
    else:
        raise WaveformFormatError(f"{path}: unsupported suffix {suffix!r}")
    # channels are stored along the shorter axis
    if data.shape[0] < data.shape[1]:
        data = data.T
    if columns is not None and suffix in (".npy", ".mat"):
        data = data[:, list(columns)]
    return np.ascontiguousarray(data, dtype=np.float64)


def convert_recording(path, out_dir, rate, u_nominal=230.0, carrier_hz=50.0, scale=1.0,
                      columns=None, variable=None, skip_header=0, fmt="raw_f64"):
    """Write one native waveform file per channel; returns the written paths."""
    path = Path(path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = read_channels(path, columns, variable, skip_header) * scale
    suffix = ".csv" if fmt == "csv" else ".f64"
    written = []
    for ch in range(data.shape[1]):
        samples = data[:, ch]
        bad = np.flatnonzero(~np.isfinite(samples))
        if bad.size:
            raise WaveformFormatError(f"{path}: channel {ch} non-finite at index {bad[0]}")
        w = SampledWaveform(samples, rate, u_nominal, carrier_hz)
        name = path.stem if data.shape[1] == 1 else f"{path.stem}_ch{ch}"
        written.append(save_waveform(w, out_dir / f"{name}{suffix}", fmt))
    return written

"""Recreation fidelity experiment: P_stc versus P_st over a signal corpus.

For every signal the reference P_st comes from the original waveform.  For
every (T_w, method) pair the VFI of each window is recreated, the windows are
joined into one record, and P_stc is measured on the resynthesized voltage.
Fidelity is summarized per (T_w, method) by the zero-intercept slope a_Pst
and the Pearson coefficient r_Pst, for all signals and for the P_st < 2 and
P_st >= 2 subsets.
"""

from __future__ import annotations

import csv
import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import flickermeter, recreate, vfi

log = logging.getLogger(__name__)

TW_CHOICES = (1.0, 10.0, 30.0, 60.0, 120.0, 300.0, 600.0)
PST_SPLIT = 2.0
SUBSETS = ("all", "pst_lt_2", "pst_ge_2")


class StatisticsError(ValueError):
    """Input pairs are degenerate for the requested statistic."""


@dataclass(frozen=True)
class EvalRow:
    signal_id: str
    t_w: float
    method: str
    p_st: float
    p_stc: float


@dataclass(frozen=True)
class Coefficients:
    a_pst: float
    r_pst: float
    n: int
    slope_free: float = math.nan
    intercept_free: float = math.nan
    note: str = ""


@dataclass
class CoefficientTable:
    name: str
    cells: dict = field(default_factory=dict)

    def t_ws(self):
        return sorted({k[0] for k in self.cells})

    def methods(self):
        return sorted({k[1] for k in self.cells})

    def __getitem__(self, key):
        return self.cells[key]


@dataclass
class EvalResult:
    rows: list
    tables: dict
    failures: dict
    warnings: int = 0


def _pairs(pairs):
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise StatisticsError("pairs must be a sequence of (p_st, p_stc)")
    if arr.shape[0] < 2:
        raise StatisticsError("at least two pairs are required")
    if not np.all(np.isfinite(arr)):
        raise StatisticsError("pairs must be finite")
    return arr[:, 0], arr[:, 1]


def slope_a_pst(pairs):
    """Least-squares slope of p_stc against p_st through the origin."""
    x, y = _pairs(pairs)
    sxx = np.dot(x, x)
    if sxx == 0:
        raise StatisticsError("all p_st values are zero")
    return float(np.dot(x, y) / sxx)


def slope_intercept(pairs):
    """Ordinary least-squares line (slope, intercept); diagnostic only."""
    x, y = _pairs(pairs)
    dx = x - x.mean()
    sxx = np.dot(dx, dx)
    if sxx == 0:
        raise StatisticsError("p_st has zero variance")
    slope = np.dot(dx, y - y.mean()) / sxx
    return float(slope), float(y.mean() - slope * x.mean())


def pearson_r_pst(pairs):
    """Pearson product-moment correlation of p_st and p_stc."""
    x, y = _pairs(pairs)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise StatisticsError("zero variance in p_st or p_stc")
    r = np.dot(dx, dy) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def coefficients(pairs):
    """All fidelity statistics for one cell; degenerate cells get NaN and a note."""
    n = len(pairs)
    notes = []
    a = r = sf = b = math.nan
    try:
        a = slope_a_pst(pairs)
    except StatisticsError as exc:
        notes.append(f"slope: {exc}")
    try:
        r = pearson_r_pst(pairs)
        sf, b = slope_intercept(pairs)
    except StatisticsError as exc:
        notes.append(f"pearson: {exc}")
    if n < 2:
        notes = ["insufficient data"]
    return Coefficients(a, r, n, sf, b, "; ".join(notes))


def window_seed(master_seed, signal_id, t_w, method, window_index):
    """64-bit seed for one window, split from the master seed by key."""
    key = (zlib.crc32(signal_id.encode("utf-8")), int(round(t_w * 1000)),
           recreate.METHODS.index(method), int(window_index))
    ss = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def recreate_waveform(w, records, method, master_seed, signal_id="", params=None):
    """Recreate every window of ``records`` and synthesize one joined waveform."""
    base = params or {}
    trajectories = []
    for rec in records:
        p = recreate.RecreationParams(
            method=method,
            seed=window_seed(master_seed, signal_id, rec.t_w, method, rec.window_index),
            u_nominal=w.u_nominal,
            step_duration=1.0 / (2.0 * w.carrier_hz),
            **base)
        trajectories.append(recreate.build_trajectory(rec, p))
    traj = recreate.concatenate(trajectories, join_duration=1.0 / (2.0 * w.carrier_hz))
    return recreate.synthesize_from_trajectory(traj, w.carrier_hz, w.rate, w.u_nominal), traj


def evaluate_signal(signal_id, w, t_w_list, methods, master_seed, pst_window=None,
                    sr_threshold_rel=vfi.DEFAULT_SR_THRESHOLD):
    """EvalRows for one signal; raises on the first module error."""
    p_st = flickermeter.pst(w, pst_window).p_st
    rms = vfi.compute_rms_series(w)
    events = vfi.detect_changes(rms, w.u_nominal, sr_threshold_rel)
    rows, n_warn = [], 0
    for t_w in t_w_list:
        records = vfi.aggregate_vfi(rms, events, t_w)
        for method in methods:
            rec_w, traj = recreate_waveform(w, records, method, master_seed, signal_id)
            n_warn += len(traj.warnings)
            p_stc = flickermeter.pst(rec_w, pst_window).p_st
            rows.append(EvalRow(signal_id, float(t_w), method, p_st, p_stc))
    return rows, n_warn


def build_tables(rows):
    """Coefficient tables for all signals and for the P_st split."""
    select = {
        "all": lambda r: True,
        "pst_lt_2": lambda r: r.p_st < PST_SPLIT,
        "pst_ge_2": lambda r: r.p_st >= PST_SPLIT,
    }
    tables = {}
    keys = sorted({(r.t_w, r.method) for r in rows})
    for name in SUBSETS:
        table = CoefficientTable(name)
        for t_w, method in keys:
            pairs = [(r.p_st, r.p_stc) for r in rows
                     if r.t_w == t_w and r.method == method and select[name](r)]
            table.cells[(t_w, method)] = coefficients(pairs)
        tables[name] = table
    return tables


def _named(dataset):
    if isinstance(dataset, dict):
        return sorted(dataset.items())
    return [(f"sig{i:03d}", w) for i, w in enumerate(dataset)]


def run_evaluation(dataset, t_w_list=TW_CHOICES, methods=recreate.METHODS, master_seed=0,
                   workers=1, pst_window=flickermeter.PST_WINDOW_S):
    """Run the experiment over ``dataset`` (mapping id -> waveform, or a list).

    Signals that fail are recorded in ``failures`` and skipped.  Results do
    not depend on ``workers``.
    """
    for t_w in t_w_list:
        if t_w not in TW_CHOICES:
            raise ValueError(f"t_w = {t_w} s is not one of {TW_CHOICES}")
    for m in methods:
        if m not in recreate.METHODS:
            raise ValueError(f"unknown method {m!r}")
    named = _named(dataset)

    def task(item):
        sid, w = item
        try:
            return sid, evaluate_signal(sid, w, t_w_list, methods, master_seed, pst_window), None
        except Exception as exc:  # batch continues; failure is reported
            log.error("signal %s failed: %s", sid, exc)
            return sid, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(task, named))
    else:
        outcomes = [task(item) for item in named]

    rows, failures, n_warn = [], {}, 0
    for sid, result, err in sorted(outcomes, key=lambda o: o[0]):
        if err is not None:
            failures[sid] = err
            continue
        rows.extend(result[0])
        n_warn += result[1]
    rows.sort(key=lambda r: (r.signal_id, r.t_w, recreate.METHODS.index(r.method)))
    return EvalResult(rows, build_tables(rows), failures, n_warn)


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


def write_pairs_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("signal_id", "t_w", "method", "p_st", "p_stc"))
        for r in rows:
            writer.writerow((r.signal_id, f"{r.t_w:g}", r.method, repr(r.p_st), repr(r.p_stc)))


def write_table_csv(table, path):
    """One row per T_w: r then a per method, then n and free-fit diagnostics."""
    methods = table.methods()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_w"] + [f"r_pst_{m}" for m in methods]
                        + [f"a_pst_{m}" for m in methods] + [f"n_{m}" for m in methods]
                        + [f"a_free_{m}" for m in methods] + [f"b_free_{m}" for m in methods]
                        + ["note"])
        for t_w in table.t_ws():
            cells = [table.cells.get((t_w, m)) for m in methods]
            notes = sorted({f"{m}: {c.note}" for m, c in zip(methods, cells) if c and c.note})
            writer.writerow([f"{t_w:g}"] + [_fmt(c.r_pst) for c in cells]
                            + [_fmt(c.a_pst) for c in cells] + [c.n for c in cells]
                            + [_fmt(c.slope_free) for c in cells]
                            + [_fmt(c.intercept_free) for c in cells]
                            + ["; ".join(notes)])

"""Command-line front end: ``vfirec {vfi,recreate,flicker,eval,convert}``.

Exit status: 0 all outputs written, 1 some signals failed during ``eval``,
2 usage/parameter/file errors, 3 VFI record validation errors.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, dataset, evalstats, flickermeter, plots, recreate, vfi
from .signal_io import (ParameterError, WaveformDataError, WaveformFormatError,
                        format_from_path, load_waveform, save_waveform)

log = logging.getLogger("vfirec")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2, 3
THREADS_ENV = "VFIREC_THREADS"
WAVEFORM_SUFFIXES = (".csv", ".f64", ".bin", ".raw")


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise UsageError("empty list")
    return values


def _t_w_list(text):
    values = _float_list(text)
    for v in values:
        if not v > 0:
            raise UsageError(f"t_w must be positive, got {v:g}")
    return values


def _methods(text):
    methods = [m.strip().upper() for m in text.split(",") if m.strip()]
    for m in methods:
        if m not in recreate.METHODS:
            raise UsageError(f"unknown method {m!r}; expected one of {', '.join(recreate.METHODS)}")
    return methods


def _expand_inputs(patterns):
    paths = []
    for pat in patterns:
        matches = sorted(glob.glob(pat))
        if not matches:
            if glob.has_magic(pat):
                raise UsageError(f"no files match {pat}")
            raise UsageError(f"input file not found: {pat}")
        paths.extend(Path(m) for m in matches)
    return paths


def _load(path, fmt):
    return load_waveform(path, format_from_path(path) if fmt == "auto" else fmt)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command, config, inputs, outputs, extra=None):
    manifest = {
        "tool": "vfirec",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": {str(Path(p).relative_to(out_dir)): _sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def cmd_vfi(args):
    t_ws = _t_w_list(args.tw)
    inputs = _expand_inputs(args.inputs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {"inputs": [str(p) for p in inputs], "tw": t_ws, "format": args.format,
              "sr_threshold": args.sr_threshold, "out": str(out)}
    written, status = [], EXIT_OK
    for path in inputs:
        try:
            w = _load(path, args.format)
            rms = vfi.compute_rms_series(w)
            events = vfi.detect_changes(rms, w.u_nominal, args.sr_threshold)
            for t_w in t_ws:
                records = vfi.aggregate_vfi(rms, events, t_w)
                dest = out / f"{path.stem}_tw{t_w:g}.csv"
                vfi.write_vfi_csv(records, dest)
                written.append(dest)
        except (OSError, WaveformFormatError, WaveformDataError, ParameterError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            status = EXIT_USAGE
    _write_manifest(out, "vfi", config, [p for p in inputs if p.exists()], written)
    return status


def cmd_recreate(args):
    method = _methods(args.method)
    if len(method) != 1:
        raise UsageError("recreate takes exactly one method")
    method = method[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if (args.vfi is None) == (args.inputs is None):
        raise UsageError("give exactly one of --vfi or --in")

    if args.vfi is not None:
        src = _expand_inputs([args.vfi])[0]
        records = vfi.read_vfi_csv(src)
        u_nominal, carrier_hz, rate = args.u_nominal, args.carrier, args.rate
        sources = [src]
    else:
        src = _expand_inputs([args.inputs])[0]
        w = _load(src, args.format)
        t_w = _t_w_list(args.tw)
        if len(t_w) != 1:
            raise UsageError("recreate from a waveform takes a single --tw")
        records = vfi.compute_vfi(w, t_w[0])
        u_nominal, carrier_hz, rate = w.u_nominal, w.carrier_hz, w.rate
        sources = [src]
    if not records:
        raise UsageError(f"{src}: no VFI records")

    signal_id = src.stem
    trajectories = []
    for row, rec in enumerate(records, start=1):
        p = recreate.RecreationParams(
            method=method,
            seed=evalstats.window_seed(args.seed, signal_id, rec.t_w, method, rec.window_index),
            u_nominal=u_nominal, step_duration=1.0 / (2.0 * carrier_hz))
        try:
            trajectories.append(recreate.build_trajectory(rec, p))
        except recreate.RecreationError as exc:
            print(f"error: {src}: row {row}: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
    traj = recreate.concatenate(trajectories, join_duration=1.0 / (2.0 * carrier_hz))

    stem = f"{signal_id}_{method}_seed{args.seed}"
    written = [out / f"{stem}_trajectory.csv", out / f"{stem}_warnings.csv"]
    recreate.write_trajectory_csv(traj, written[0])
    recreate.write_warnings_csv(traj.warnings, written[1])
    if args.synthesize:
        w_rec = recreate.synthesize_from_trajectory(traj, carrier_hz, rate, u_nominal)
        suffix = ".csv" if args.out_format == "csv" else ".f64"
        dest = save_waveform(w_rec, out / f"{stem}_waveform{suffix}", args.out_format)
        written.append(dest)
        if args.out_format == "raw_f64":
            written.append(dest.with_name(dest.stem + ".meta.json"))
    config = {"method": method, "seed": args.seed, "vfi": args.vfi, "inputs": args.inputs,
              "tw": args.tw, "u_nominal": u_nominal, "carrier": carrier_hz, "rate": rate,
              "synthesize": args.synthesize, "out_format": args.out_format}
    _write_manifest(out, "recreate", config, sources, written,
                    {"warnings": len(traj.warnings)})
    return EXIT_OK


def cmd_flicker(args):
    src = _expand_inputs([args.inputs])[0]
    w = _load(src, args.format)
    window = None if args.window == 0 else args.window
    p = flickermeter.compute_pinst(w)
    result = flickermeter.compute_pst(p, window)
    out = Path(args.out)
    if out.suffix.lower() != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{src.stem}_flicker.json"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.to_json())
    written = [out]
    if args.pinst_csv:
        dest = out.with_name(f"{src.stem}_pinst.csv")
        flickermeter.write_pinst_csv(p, dest)
        written.append(dest)
    config = {"inputs": str(src), "format": args.format, "window": args.window}
    _write_manifest(out.parent, "flicker", config, [src], written, {"p_st": result.p_st})
    print(f"{src.name}: P_st = {result.p_st:.4f}")
    return EXIT_OK


def _dataset_paths(data):
    root = Path(data)
    if root.is_dir():
        paths = sorted(p for p in root.iterdir()
                       if p.suffix.lower() in WAVEFORM_SUFFIXES and not p.name.endswith(".meta.json"))
        if not paths:
            raise UsageError(f"no waveform files in {root}")
        return paths
    return _expand_inputs([data])


def cmd_eval(args):
    t_ws = _t_w_list(args.tw)
    bad = [t for t in t_ws if t not in evalstats.TW_CHOICES]
    if bad:
        raise UsageError(f"t_w values {bad} not in {list(evalstats.TW_CHOICES)}")
    methods = _methods(args.methods)
    threads = args.threads or _default_threads()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = _dataset_paths(args.data)

    signals, failures = {}, {}
    for path in paths:
        try:
            signals[path.stem] = _load(path, args.format)
        except (OSError, WaveformFormatError, WaveformDataError, ParameterError) as exc:
            failures[path.stem] = f"{type(exc).__name__}: {exc}"
            print(f"error: {path}: {exc}", file=sys.stderr)

    result = evalstats.run_evaluation(signals, t_ws, methods, args.seed, workers=threads)
    failures.update(result.failures)

    written = [out / "pairs.csv"]
    evalstats.write_pairs_csv(result.rows, written[0])
    for name, table in result.tables.items():
        dest = out / f"table_{name}.csv"
        evalstats.write_table_csv(table, dest)
        written.append(dest)
    if not args.no_plots:
        plot_dir = out / "plots"
        plot_dir.mkdir(exist_ok=True)
        select = {"all": lambda r: True,
                  "pst_lt_2": lambda r: r.p_st < evalstats.PST_SPLIT,
                  "pst_ge_2": lambda r: r.p_st >= evalstats.PST_SPLIT}
        for name, table in result.tables.items():
            for (t_w, method), cell in sorted(table.cells.items()):
                rows = [r for r in result.rows
                        if r.t_w == t_w and r.method == method and select[name](r)]
                if not rows:
                    continue
                dest = plot_dir / f"scatter_{name}_tw{t_w:g}_{method}.svg"
                plots.scatter_svg(rows, dest, f"{method}, T_w = {t_w:g} s ({name})", cell)
                written.append(dest)

    config = {"data": str(args.data), "tw": t_ws, "methods": methods, "seed": args.seed,
              "format": args.format, "plots": not args.no_plots,
              "pst_window": flickermeter.PST_WINDOW_S,
              "sr_threshold": vfi.DEFAULT_SR_THRESHOLD}
    _write_manifest(out, "eval", config, [p for p in paths if p.stem in signals], written,
                    {"failures": failures, "recreation_warnings": result.warnings,
                     "threads": threads})
    for name in evalstats.SUBSETS:
        print(f"[{name}]")
        table = result.tables[name]
        for (t_w, method), c in sorted(table.cells.items()):
            print(f"  T_w={t_w:>5g} s {method}: a_pst={c.a_pst:.3f} r_pst={c.r_pst:.3f} n={c.n}"
                  + (f"  ({c.note})" if c.note else ""))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_convert(args):
    src = _expand_inputs([args.inputs])[0]
    columns = [int(c) for c in args.columns.split(",")] if args.columns else None
    written = dataset.convert_recording(
        src, args.out, args.rate, args.u_nominal, args.carrier, args.scale,
        columns=columns, variable=args.variable, skip_header=args.skip_header,
        fmt=args.out_format)
    for p in written:
        print(p)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="vfirec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt_choices = ("auto", "csv", "raw_f64")
    tw_default = ",".join(f"{t:g}" for t in evalstats.TW_CHOICES)

    p = sub.add_parser("vfi", help="extract VFI records per discrimination period")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--format", choices=fmt_choices, default="auto")
    p.add_argument("--tw", default=tw_default)
    p.add_argument("--sr-threshold", type=float, default=vfi.DEFAULT_SR_THRESHOLD,
                   help="speed threshold as a fraction of U_N per second")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vfi)

    p = sub.add_parser("recreate", help="recreate a level trajectory with M1/M2/M3")
    p.add_argument("--vfi", help="VFI CSV written by the vfi command")
    p.add_argument("--in", dest="inputs", help="waveform to take VFI from")
    p.add_argument("--format", choices=fmt_choices, default="auto")
    p.add_argument("--tw", default="1")
    p.add_argument("--method", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--u-nominal", type=float, default=230.0)
    p.add_argument("--carrier", type=float, default=50.0)
    p.add_argument("--rate", type=float, default=20000.0)
    p.add_argument("--synthesize", action="store_true", help="also write the voltage waveform")
    p.add_argument("--out-format", choices=("csv", "raw_f64"), default="raw_f64")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_recreate)

    p = sub.add_parser("flicker", help="short-term flicker severity of a waveform")
    p.add_argument("--in", dest="inputs", required=True)
    p.add_argument("--format", choices=fmt_choices, default="auto")
    p.add_argument("--window", type=float, default=flickermeter.PST_WINDOW_S,
                   help="required record length in seconds; 0 accepts any length")
    p.add_argument("--pinst-csv", action="store_true")
    p.add_argument("--out", required=True, help="JSON file or output directory")
    p.set_defaults(func=cmd_flicker)

    p = sub.add_parser("eval", help="run the recreation fidelity experiment")
    p.add_argument("--data", required=True, help="directory of waveform files or a glob")
    p.add_argument("--format", choices=fmt_choices, default="auto")
    p.add_argument("--tw", default=tw_default)
    p.add_argument("--methods", default=",".join(recreate.METHODS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("convert", help="convert a third-party recording to native files")
    p.add_argument("--in", dest="inputs", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--u-nominal", type=float, default=230.0)
    p.add_argument("--carrier", type=float, default=50.0)
    p.add_argument("--scale", type=float, default=1.0, help="multiplier to volts")
    p.add_argument("--columns", help="comma-separated channel columns")
    p.add_argument("--variable", help="variable name inside a .mat file")
    p.add_argument("--skip-header", type=int, default=0)
    p.add_argument("--out-format", choices=("csv", "raw_f64"), default="raw_f64")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except recreate.RecreationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, WaveformFormatError, WaveformDataError, ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

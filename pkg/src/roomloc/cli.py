"""Command line interface: ``roomloc <command> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import harness
from .dictionary import build_dictionary, build_grid, coherence, write_matrix_csv
from .localize import MicPlacementError, SubsamplingScheme, localize, synthesize_measurement
from .modal import (
    ModeIndex,
    Point3,
    RoomSpec,
    enumerate_modes_below,
    enumerate_modes_in_index_cube,
    make_mode,
    rtf,
)


def _triple(text, cast=float, sep=None):
    parts = text.replace("x", ",").split(",") if sep is None else text.split(sep)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three values, got {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _sources(text):
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        pos, _, q = item.partition("@")
        out.append((_triple(pos, sep=","), float(q) if q else 1.0))
    if not out:
        raise argparse.ArgumentTypeError("no sources given")
    return out


def _num(v) -> str:
    return repr(float(v))


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _room(args) -> RoomSpec:
    return RoomSpec(*args.room, rt60=args.rt60, c=args.c, rho0=args.rho0)


def _modes(args, room):
    if args.f_max is not None:
        return enumerate_modes_below(args.f_max, room)
    return enumerate_modes_in_index_cube(args.n_max, room)


def _add_room(p, default="4x7x3"):
    p.add_argument("--room", type=_triple, default=_triple(default), help="LxxLyxLz in meters")
    p.add_argument("--rt60", type=float, default=0.5)
    p.add_argument("--c", type=float, default=343.0)
    p.add_argument("--rho0", type=float, default=1.2)


def _add_modes(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--n-max", type=int, default=3, help="index cube 0..n_max (default 3)")
    g.add_argument("--f-max", type=float, default=None, help="all modes up to this frequency [Hz]")


def cmd_modes(args):
    room = _room(args)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nx", "ny", "nz", "f_hz", "omega", "delta", "kn"])
        for m in _modes(args, room):
            w.writerow([*m.index.astuple(), *map(_num, (m.frequency, m.omega_n, m.delta_n, m.kn_norm))])


def cmd_rtf(args):
    room = _room(args)
    mode_cap = args.mode_fmax or 2.0 * args.f_max_sweep
    modes = enumerate_modes_below(mode_cap, room)
    freqs = np.linspace(args.f_min, args.f_max_sweep, args.points)
    h = rtf(Point3.of(args.mic), Point3.of(args.src), 2 * np.pi * freqs, modes, room, args.q)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_hz", "omega", "real", "imag", "magnitude"])
        for f, v in zip(freqs, h):
            w.writerow([_num(f), _num(2 * np.pi * f), _num(v.real), _num(v.imag), _num(abs(v))])
    if args.figure:
        from .plots import plot_rtf

        plot_rtf(freqs, h, args.figure, title=f"mic {args.mic}, source {args.src}")


_PLANES = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}


def cmd_field(args):
    room = _room(args)
    mode = make_mode(ModeIndex(*args.mode), room)
    fixed = "xyz".index(args.axis)
    ua, va = _PLANES[args.axis]
    u = np.linspace(0, room.dims[ua], args.res)
    v = np.linspace(0, room.dims[va], args.res)
    uu, vv = np.meshgrid(u, v)
    k = np.array(mode.k)
    values = np.cos(k[ua] * uu) * np.cos(k[va] * vv) * math.cos(k[fixed] * args.at)
    names = ["xyz"[ua], "xyz"[va]]
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, "value"])
        for a, b, val in zip(uu.ravel(), vv.ravel(), values.ravel()):
            w.writerow([_num(a), _num(b), _num(val)])
    if args.figure:
        from .plots import plot_field

        plot_field(uu, vv, values, args.figure, labels=[f"{n} [m]" for n in names],
                   title=f"mode {mode.index}, {args.axis} = {args.at} m")


def _dictionary(args):
    room = _room(args)
    grid = build_grid(room, args.grid, args.margin)
    return build_dictionary(_modes(args, room), grid, Point3.of(args.mic), room)


def cmd_dict_stats(args):
    d = _dictionary(args)
    report = coherence(d, bins=args.bins).to_dict()
    report.update(rows=d.shape[0], columns=d.shape[1], zero_columns=list(d.zero_columns))
    if args.dump_matrix:
        write_matrix_csv(d, args.dump_matrix)
    with _output(args.out) as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")


def cmd_localize(args):
    d = _dictionary(args)
    # synthetic sources are snapped to the nearest candidate cell
    idx = [d.grid.nearest(p) for p, _ in args.sources]
    sources = [(d.grid.point(i), q) for i, (_, q) in zip(idx, args.sources)]
    meas = synthesize_measurement(sources, d.modes, d.mic, d.room, args.snr_db, seed=args.seed)
    rows = args.rows if args.rows is not None else d.shape[0]
    scheme = SubsamplingScheme(rows, args.col_factor, args.seed)
    res = localize(d, meas, args.k, scheme, args.max_outer, args.tol, args.inner_max_iter,
                   allow_symmetric_mic=args.allow_symmetric_mic)
    doc = res.to_dict()
    doc["true_grid_indices"] = sorted(idx)
    doc["exact_support"] = res.converged and sorted(res.grid_indices) == sorted(idx)
    with _output(args.out) as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def cmd_montecarlo(args):
    cfg = harness.ExperimentConfig.load(args.config)
    progress = None
    if args.verbose:
        def progress(done, total):
            print(f"\r{done}/{total}", end="", file=sys.stderr, flush=True)
    report = harness.run_sweep(cfg, jobs=args.jobs, progress=progress)
    if args.out:
        harness.write_report(report, args.out, args.format)
    else:
        sys.stdout.write(harness.emit_report(report, args.format))
    if args.figure:
        from .plots import plot_sweep

        plot_sweep(report.summary(), cfg.sweep_axis, args.figure)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roomloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="table of room modes")
    _add_room(p)
    _add_modes(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("rtf", help="complex RTF over a frequency sweep")
    _add_room(p)
    p.add_argument("--mic", type=_triple, required=True)
    p.add_argument("--src", type=_triple, required=True)
    p.add_argument("--f-min", type=float, default=1.0)
    p.add_argument("--f-max", dest="f_max_sweep", type=float, default=200.0)
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--mode-fmax", type=float, default=None, help="mode truncation [Hz], default 2*f-max")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--out")
    p.add_argument("--figure", help="also render a PNG/PDF plot")
    p.set_defaults(func=cmd_rtf)

    p = sub.add_parser("field", help="eigenfunction on a 2D slice")
    _add_room(p, default="5x5x3")
    p.add_argument("--mode", type=lambda s: _triple(s, int, ","), required=True)
    p.add_argument("--axis", choices="xyz", default="z", help="axis normal to the slice")
    p.add_argument("--at", type=float, default=0.0, help="slice coordinate [m]")
    p.add_argument("--res", type=int, default=51)
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_field)

    def dict_args(p):
        _add_room(p)
        _add_modes(p)
        p.add_argument("--mic", type=lambda s: _triple(s, sep=","), default=(0.9, 2.2, 0.65))
        p.add_argument("--grid", type=lambda s: _triple(s, int), default=(10, 15, 10))
        p.add_argument("--margin", type=float, default=0.0)

    p = sub.add_parser("dict-stats", help="coherence report of the sensing dictionary")
    dict_args(p)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--dump-matrix")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dict_stats)

    p = sub.add_parser("localize", help="localize synthetic sources")
    dict_args(p)
    p.add_argument("--sources", type=_sources, required=True, help='"x,y,z@q;x,y,z@q"')
    p.add_argument("--k", type=int, default=None, help="sparsity, default number of sources")
    p.add_argument("--col-factor", type=float, default=2.0)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-outer", type=int, default=300)
    p.add_argument("--inner-max-iter", type=int, default=50)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--allow-symmetric-mic", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("montecarlo", help="Monte Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--figure")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "k", 1) is None:
        args.k = len(args.sources)
    try:
        args.func(args)
    except (ValueError, MicPlacementError, OSError) as exc:
        print(f"roomloc {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``dimlab <subcommand> ...``.

Exit codes: 0 success, 1 a verification scenario did not behave as
expected, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from fractions import Fraction
from pathlib import Path

from .cascade import MassVector, read_csv, write_csv
from .convolve import convolve, convolve_power, realize
from .locdim import (
    SLOPE_WINDOW, TAIL_WINDOW, dim_at_left_endpoint, dim_at_right_endpoint, dim_profile,
    profile_grid, AmbiguousEndpointBranch,
)
from .measures import IfsMeasure, MeasureError, gaps, load_measure, support
from .spectrum import dim_range, legendre_spectrum
from .verify import parse_value, run_suite, summary_text, write_reports

__all__ = ["main", "build_parser", "spectrum_svg"]


def _measure_or_vector(ref: str, level: int | None, exact: bool):
    if ref.endswith(".csv") and Path(ref).is_file():
        return read_csv(ref)
    mu = load_measure(ref)
    if level is None:
        return mu
    return realize(mu, level, exact=exact)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def _emit_vector(v: MassVector, out) -> None:
    f, close = _open_out(out)
    try:
        write_csv(v, f)
    finally:
        if close:
            f.close()


def _num(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


# -- subcommands -------------------------------------------------------------

def cmd_show(args) -> int:
    mu = load_measure(args.measure)
    print(f"measure: {mu}")
    print(f"hull: [{_fr(mu.hull[0])}, {_fr(mu.hull[1])}]")
    print(f"total mass: {mu.total_mass}")
    s = support(mu, args.level)
    shown = ", ".join(f"[{_fr(a)}, {_fr(b)}]" for a, b in s.intervals[:args.max_intervals])
    more = "" if len(s.intervals) <= args.max_intervals else f" ... ({len(s.intervals)} intervals)"
    print(f"support at level {args.level}: {shown}{more}")
    gs = gaps(s)
    if gs:
        g = max(gs, key=lambda g: g.diameter)
        print(f"gaps: {len(gs)}; largest ({_fr(g.left)}, {_fr(g.right)}) diameter {_fr(g.diameter)}")
    else:
        print("gaps: none")
    if isinstance(mu, IfsMeasure):
        lo, hi = dim_range(mu)
        print(f"local dimension range: [{lo:.6f}, {hi:.6f}]")
        for label, fn in (("left", dim_at_left_endpoint), ("right", dim_at_right_endpoint)):
            try:
                print(f"dimension at {label} endpoint: {fn(mu).value:.6f}")
            except AmbiguousEndpointBranch:
                print(f"dimension at {label} endpoint: no single endpoint branch")
    return 0


def _fr(x) -> str:
    x = Fraction(x) if not isinstance(x, float) else x
    return str(x)


def cmd_refine(args) -> int:
    mu = load_measure(args.measure)
    v = realize(mu, args.level, exact=args.mode == "rational")
    _emit_vector(v, args.out)
    return 0


def cmd_convolve(args) -> int:
    a, b = read_csv(args.a), read_csv(args.b)
    _emit_vector(convolve(a, b), args.out)
    return 0


def cmd_power(args) -> int:
    if args.a:
        a = read_csv(args.a)
    elif args.measure:
        a = realize(load_measure(args.measure), args.level, exact=args.mode == "rational")
    else:
        raise MeasureError("power needs --a FILE or --measure REF with --level")
    _emit_vector(convolve_power(a, args.k), args.out)
    return 0


def cmd_dim(args) -> int:
    level = args.level if args.level is not None else args.nmax
    v = _measure_or_vector(args.measure, level, args.mode == "rational")
    x = parse_value(args.x)
    p = dim_profile(v, x, args.nmin, args.nmax, args.window, args.slope_window)
    f, close = _open_out(args.out)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["n", "r", "lower", "upper", "d_lower", "d_upper"])
        for row in p.rows():
            w.writerow([_num(c) for c in row])
        f.write(f"# x={float(x)!r} "
                f"upper_dim_est={p.upper_dim_est:.6f} lower_dim_est={p.lower_dim_est:.6f} "
                f"slope_est={p.slope_est:.6f} window={args.window}\n")
    finally:
        if close:
            f.close()
    return 0


def cmd_profile(args) -> int:
    v = _measure_or_vector(args.measure, args.level, args.mode == "rational")
    lo, hi = v.support().hull
    if args.nmax > v.level:
        raise MeasureError(f"--nmax {args.nmax} exceeds the vector level {v.level}")
    nmin = args.nmin if args.nmin is not None else max(1, args.nmax - max(args.window, args.slope_window) - 1)
    pts = [lo + (hi - lo) * Fraction(i, args.grid + 1) for i in range(1, args.grid + 1)]
    profiles = profile_grid(v, pts, nmin, args.nmax, args.window, args.slope_window, skip_empty=True)
    f, close = _open_out(args.out)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["z", "upper_dim_est", "lower_dim_est", "slope_est"])
        for z, p in zip(pts, profiles):
            if p is None:
                w.writerow([repr(float(z)), "inf", "inf", "nan"])
            else:
                w.writerow([repr(float(z)), repr(p.upper_dim_est), repr(p.lower_dim_est),
                            repr(p.slope_est)])
    finally:
        if close:
            f.close()
    return 0


def spectrum_svg(curve, width: int = 480, height: int = 360) -> str:
    """Single-file SVG of the ``(alpha, f(alpha))`` curve with plain axes."""
    xs, ys = curve.alpha.tolist(), curve.f_alpha.tolist()
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-9:
        y1 = y0 + 1.0
    pad = 40

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n')
    out.write(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n')
    out.write(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n')
    out.write(f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle">alpha '
              f'[{x0:.4f}, {x1:.4f}]</text>\n')
    out.write(f'<text x="12" y="{pad - 12}">f(alpha) max {y1:.4f}</text>\n')
    out.write(f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/>\n')
    out.write("</svg>\n")
    return out.getvalue()


def cmd_spectrum(args) -> int:
    mu = load_measure(args.measure)
    if not isinstance(mu, IfsMeasure):
        raise MeasureError("the spectrum needs a self-similar (ifs) measure")
    curve = legendre_spectrum(mu, args.qmin, args.qmax, args.steps)
    f, close = _open_out(args.out)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["q", "beta", "alpha", "f_alpha"])
        for row in curve.rows():
            w.writerow([repr(c) for c in row])
    finally:
        if close:
            f.close()
    if args.svg:
        Path(args.svg).write_text(spectrum_svg(curve))
    lo, hi = curve.alpha_range
    print(f"# alpha range [{lo:.6f}, {hi:.6f}], max f {curve.f_max:.6f}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    reports = run_suite(args.suite, threads=args.threads)
    if args.out:
        write_reports(reports, args.out)
    sys.stdout.write(summary_text(reports))
    return 0 if all(r.ok for r in reports) else 1


# -- parser --------------------------------------------------------------------

def _add_mode(p):
    p.add_argument("--mode", choices=("float", "rational"), default="float",
                   help="cell-mass arithmetic: double precision or exact rationals")


def _add_windows(p):
    p.add_argument("--window", type=int, default=TAIL_WINDOW,
                   help="tail window for the upper/lower estimates (default %(default)s)")
    p.add_argument("--slope-window", type=int, default=SLOPE_WINDOW,
                   help="levels used by the slope estimate (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dimlab",
        description="Ball-mass brackets, local dimensions and multifractal spectra of "
                    "lattice self-similar measures, atomic measures and their convolutions.")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for grid evaluation (default: DIMLAB_THREADS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)
    measure_help = ("preset (cantor, lebesgue, lebesgue(3), example33, bernoulli(1/3), triangle), "
                    "JSON text, or path to a JSON measure file")

    p = sub.add_parser("show", help="describe a measure: hull, support, gaps, dimension range",
                       description="Print a measure's hull, its support and gaps at a level, "
                                   "and for self-similar measures the closed interval of local "
                                   "dimensions and the exact endpoint dimensions.")
    p.add_argument("--measure", required=True, help=measure_help)
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--max-intervals", type=int, default=8)
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("refine", help="cell masses of a measure at a lattice level (CSV)",
                       description="Cascade a measure into the masses of its level-n lattice "
                                   "cells and write the mass-vector CSV.")
    p.add_argument("--measure", required=True, help=measure_help)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", default="-", help="output CSV (default stdout)")
    _add_mode(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("convolve", help="convolve two mass-vector CSVs",
                       description="Convolve two mass vectors (line, or circle when both are "
                                   "circle vectors); the result's span width is the sum of the "
                                   "inputs' widths so ball brackets stay sound.")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("power", help="k-fold convolution power of a mass vector",
                       description="Convolve a mass vector with itself k times.")
    p.add_argument("--a", help="input mass-vector CSV")
    p.add_argument("--measure", help=measure_help)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", default="-")
    _add_mode(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("dim", help="per-level ball-mass brackets and dimension estimates at a point",
                       description="Bracket mu(B(x, m^-n)) for nmin <= n <= nmax and print the "
                                   "log-ratio table with upper, lower and slope estimates of "
                                   "the local dimension at x.")
    p.add_argument("--measure", required=True, help=measure_help + ", or a mass-vector CSV")
    p.add_argument("--x", required=True, help="point, e.g. 0, 1/2 or 0.25")
    p.add_argument("--nmin", type=int, default=1)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--level", type=int, default=None,
                   help="refinement level (default nmax; deeper sharpens convolution brackets)")
    p.add_argument("--out", default="-")
    _add_windows(p)
    _add_mode(p)
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("profile", help="dimension estimates on a uniform grid of the hull",
                       description="Evaluate upper, lower and slope estimates of the local "
                                   "dimension at grid points strictly inside the support hull.")
    p.add_argument("--measure", required=True, help=measure_help + ", or a mass-vector CSV")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--level", type=int, default=12)
    p.add_argument("--nmin", type=int, default=None)
    p.add_argument("--nmax", type=int, default=10)
    p.add_argument("--out", default="-")
    _add_windows(p)
    _add_mode(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("spectrum", help="beta(q), alpha(q) and the Legendre spectrum f(alpha)",
                       description="Solve sum p_i^q m^-beta = 1 on a q-grid and write q, beta, "
                                   "alpha = -dbeta/dq and f = alpha q + beta.")
    p.add_argument("--measure", required=True, help=measure_help)
    p.add_argument("--qmin", type=float, default=-10.0)
    p.add_argument("--qmax", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=401)
    p.add_argument("--out", default="-")
    p.add_argument("--svg", default=None, help="also write an SVG plot of f(alpha)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("verify", help="run the scenario suite of local-dimension bounds",
                       description="Run each scenario (interior bounds when supp nu has no long "
                                   "gap, boundary and gap-point dimensions, lower bounds, "
                                   "isolated boundary values of powers, circle powers) and "
                                   "report pass / fail / hypothesis-not-met.")
    p.add_argument("--suite", default="default", help="suite JSON file or 'default'")
    p.add_argument("--out", default=None, help="directory for summary and per-scenario CSVs")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ["DIMLAB_THREADS"] = str(args.threads)
    try:
        return args.func(args)
    except (MeasureError, ValueError, OSError, ZeroDivisionError) as exc:
        print(f"dimlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

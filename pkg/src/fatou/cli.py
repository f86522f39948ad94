"""``fatou`` command line.

Exit codes: 0 ok, 2 parse/config error, 3 numerical failure, 4 resource cap,
5 precondition violation. Output files are written to a temporary name and
renamed, so a failing command leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import report
from .core import INF, parse_map, parse_point
from .core.sphere import chordal_distance, format_point, point_to_json
from .dynamics import fixed_points, koenigs_coordinate, multiplier, periodic_points
from .errors import FatouError, ParseError, PreconditionError

log = logging.getLogger("fatou")


# argument types ----------------------------------------------------------------

def _window(text):
    from .julia import Window

    try:
        return Window.parse(text)
    except (ValueError, FatouError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must be WIDTHxHEIGHT, got {text!r}") from None
    if w < 1 or h < 1 or w * h > 1 << 26:
        raise argparse.ArgumentTypeError(f"size {text!r} out of range")
    return w, h


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _map(text):
    return text  # parsed in the command so errors carry a caret annotation


# commands ----------------------------------------------------------------------

def _emit(args, doc, text):
    sys.stdout.write(report.to_json(doc) if args.json else text)


def cmd_fixed(args):
    R = parse_map(args.map)
    if R.degree == 1:
        log.warning("degree-1 map: a Möbius transformation, not a dynamical system of degree >= 2")
    recs = fixed_points(R)
    _emit(args, report.fixed_doc(R, recs), report.fixed_table(recs))


def cmd_periodic(args):
    R = parse_map(args.map)
    orbits = periodic_points(R, args.period)
    _emit(args, report.periodic_doc(R, args.period, orbits), report.periodic_table(orbits))


def cmd_julia(args):
    from . import julia

    R = parse_map(args.map)
    w, h = args.size
    win = args.window
    doc = {
        "command": "julia",
        "version": report.FORMAT_VERSION,
        "map": str(R),
        "method": args.method,
        "window": str(win),
        "size": [w, h],
        "image": args.out,
    }
    if args.method == "inverse":
        seed = parse_point(args.seed_point)
        cloud = julia.julia_inverse_iteration(R, seed, args.points, burn_in=args.burn_in, rng_seed=args.seed)
        r, _ = win.locate(cloud.points, w, h)
        doc.update({
            "seed_point": point_to_json(seed),
            "rng_seed": args.seed,
            "burn_in": args.burn_in,
            "points": int(cloud.points.size),
            "points_in_window": int(np.sum(r >= 0)),
        })
        img = julia.ppm_bytes(julia.cloud_rgb(cloud, win, w, h))
    else:
        atts = julia.find_attractors(R, args.n_max)
        raster = julia.basin_raster(R, atts, win, w, h, max_iter=args.max_iter)
        decided = float(np.mean(raster.labels > 0))
        doc.update({
            "n_max": args.n_max,
            "max_iter": args.max_iter,
            "attractors": [report.orbit_json(a) for a in atts],
            "decided_fraction": decided,
            "boundary_pixels": int(julia.boundary_mask(raster).sum()),
        })
        if not atts:
            doc["note"] = f"no attractor found to period {args.n_max}; all pixels undecided"
        img = julia.ppm_bytes(julia.raster_rgb(raster, boundary=True))
    stats = args.stats or args.out + ".json"
    doc["stats"] = stats
    julia._atomic_write(args.out, img)
    julia._atomic_write(stats, report.to_json(doc).encode())
    if args.plot:
        from . import plotting

        if args.method == "inverse":
            plotting.plot_cloud(cloud, win, args.plot, title=str(R))
        else:
            plotting.plot_basins(raster, args.plot, title=str(R))
    _emit(args, doc, report.kv_table(doc))


def cmd_components(args):
    from . import julia

    R = parse_map(args.map)
    w, h = args.size
    atts = julia.find_attractors(R, args.n_max)
    raster = julia.basin_raster(R, atts, args.window, w, h, max_iter=args.max_iter)
    cm = julia.fatou_components(raster, min_pixels=args.min_pixels)
    julia.component_orbit(R, cm, raster)
    doc = report.components_doc(R, raster, cm, julia.sullivan_summary(cm))
    if args.plot:
        from .plotting import plot_components

        plot_components(raster, cm, args.plot, title=str(R))
    _emit(args, doc, report.components_table(doc))


def cmd_koenigs(args):
    R = parse_map(args.map)
    z0 = parse_point(args.fixed_point)
    lam = multiplier(R, z0)
    if z0 is not INF:
        # snap to the accurately computed fixed point
        recs = [r for r in fixed_points(R) if chordal_distance(r.location, z0) < 1e-6]
        if recs:
            z0 = min(recs, key=lambda r: chordal_distance(r.location, z0)).location
            lam = recs[0].multiplier if len(recs) == 1 else lam
    zs = [parse_point(t) for t in args.at]
    if any(z is INF for z in zs):
        raise PreconditionError("Koenigs evaluation points must be finite")
    gs = koenigs_coordinate(R, z0, zs)
    images = [R(z) for z in zs]
    g_img = koenigs_coordinate(R, z0, [0j if w is INF else w for w in images])
    res = []
    for g, gi, w in zip(gs, g_img, images):
        ok = w is not INF and math.isfinite(abs(g)) and math.isfinite(abs(gi))
        res.append(abs(gi - lam * g) if ok else None)
    doc = report.koenigs_doc(R, z0, lam, zs, gs, res)
    _emit(args, doc, report.koenigs_table(doc))


def cmd_beltrami(args):
    from . import beltrami as bt

    if args.mu_file:
        grid, mu_vals = bt.read_qcf(args.mu_file)
        mu = bt.BeltramiField.from_samples(grid, mu_vals)
        source = {"kind": "file", "path": args.mu_file}
        k = None
    else:
        k = complex(parse_point(args.mu_const)) if isinstance(args.mu_const, str) else complex(args.mu_const)
        half = args.half_width if args.half_width else 2.0 * args.support
        grid = bt.Grid.covering(args.grid, half)
        mu = bt.BeltramiField.constant_disk(grid, k, args.support)
        source = {"kind": "constant", "k": report.cnum(k), "support": args.support}
    sol = bt.solve_normal(mu, bt.SolverConfig(tol=args.tol, max_iter=args.max_iter))
    z = grid.points()
    ratios = [b / a for a, b in zip(sol.increments, sol.increments[1:]) if a > 0]
    doc = {
        "command": "beltrami",
        "version": report.FORMAT_VERSION,
        "grid": {"n": grid.n, "center": report.cnum(grid.center), "spacing": grid.spacing},
        "mu": {**source, "k_bound": mu.k_bound, "support_radius": mu.support_radius},
        "iterations": sol.iterations,
        "increments": sol.increments,
        "max_increment_ratio": max(ratios, default=0.0),
        "c_obs": sol.c_obs,
        "residual": sol.residual,
        "f_at_1": report.cnum(sol.f_at(1.0)) if _inside(grid, 1.0) else None,
        "exact_error": None,
        "normalized": bool(args.normalize),
        "output": args.out,
    }
    if k is not None:
        ex = bt.exact_disk_solution(z, k, args.support)
        ok = bt.well_conditioned(mu.mu, bt.wirtinger(sol.f, grid))
        doc["exact_error"] = float(np.max(np.abs(sol.f - ex)[ok])) if ok.any() else 0.0
    out = bt.normalize_solution(sol) if args.normalize else sol
    bt.write_qcf(args.out, grid, out.f)
    if args.csv:
        bt.csv_dump(args.csv, grid, mu=mu.mu, f=out.f)
    if args.plot:
        from .plotting import plot_qc_grid

        plot_qc_grid(out, args.plot)
    _emit(args, doc, report.kv_table(doc))


def _inside(grid, z):
    u = (z - grid.center) / grid.spacing
    lo, hi = -(grid.n // 2), grid.n - 1 - grid.n // 2
    return lo <= u.real <= hi and lo <= u.imag <= hi


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fatou", description="Dynamics of rational maps on the Riemann sphere.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--json", action="store_true", help="print a JSON document instead of a table")
        return sp

    sp = add("fixed", cmd_fixed, "fixed points, multipliers and classes")
    sp.add_argument("map", type=_map)

    sp = add("periodic", cmd_periodic, "periodic orbits of exact period n")
    sp.add_argument("map", type=_map)
    sp.add_argument("--period", "-n", type=_positive_int, required=True)

    sp = add("julia", cmd_julia, "render an approximation of the Julia set")
    sp.add_argument("map", type=_map)
    sp.add_argument("--method", choices=("inverse", "basin"), default="inverse")
    sp.add_argument("--window", type=_window, default=_window("-2:2:-2:2"), help="RE_MIN:RE_MAX:IM_MIN:IM_MAX")
    sp.add_argument("--size", type=_size, default=(512, 512), help="WIDTHxHEIGHT")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed for inverse iteration")
    sp.add_argument("--seed-point", default="0.5", help="starting point for inverse iteration")
    sp.add_argument("--points", type=_positive_int, default=5000)
    sp.add_argument("--burn-in", type=int, default=50)
    sp.add_argument("--n-max", type=_positive_int, default=4, help="largest attractor period searched")
    sp.add_argument("--max-iter", type=_positive_int, default=500)
    sp.add_argument("--out", required=True, help="PPM output path")
    sp.add_argument("--stats", help="stats JSON path (default OUT.json)")
    sp.add_argument("--plot", help="also write a matplotlib figure (png/pdf/svg)")

    sp = add("components", cmd_components, "Fatou components and their periodicity")
    sp.add_argument("map", type=_map)
    sp.add_argument("--window", type=_window, default=_window("-2:2:-2:2"))
    sp.add_argument("--size", type=_size, default=(256, 256))
    sp.add_argument("--n-max", type=_positive_int, default=4)
    sp.add_argument("--max-iter", type=_positive_int, default=500)
    sp.add_argument("--min-pixels", type=_positive_int, default=4)
    sp.add_argument("--plot", help="also write a matplotlib figure")

    sp = add("koenigs", cmd_koenigs, "Koenigs linearizing coordinate at an attracting fixed point")
    sp.add_argument("map", type=_map)
    sp.add_argument("--fixed-point", required=True)
    sp.add_argument("--at", nargs="+", required=True)

    sp = add("beltrami", cmd_beltrami, "solve the Beltrami equation on a grid")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--mu-file", help="QCF file with mu samples")
    src.add_argument("--mu-const", help="constant k for mu = k on |z| < support")
    sp.add_argument("--support", type=float, default=1.0)
    sp.add_argument("--grid", type=_positive_int, default=256, help="samples per side")
    sp.add_argument("--half-width", type=float, help="half width of the window (default 2*support)")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=_positive_int, default=200)
    sp.add_argument("--normalize", action="store_true", help="write the solution rescaled so f(1) = 1")
    sp.add_argument("--out", required=True, help="QCF output path for f")
    sp.add_argument("--csv", help="CSV debug dump of mu and f")
    sp.add_argument("--plot", help="also write a matplotlib figure")
    return p


_VALUE_OPTS = ("--window", "--seed-point", "--fixed-point", "--mu-const")


def _glue_negative_values(argv):
    """``--window -3:3:-2:2`` -> ``--window=-3:3:-2:2`` so argparse accepts a leading minus."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except ParseError as exc:
        print(f"fatou: parse error: {exc.annotated()}", file=sys.stderr)
        return exc.exit_code
    except FatouError as exc:
        print(f"fatou: {type(exc).__name__}: {exc}", file=sys.stderr)
        exc_pts = getattr(exc, "exceptional", None)
        if exc_pts:
            print("exceptional set: " + ", ".join(format_point(e) for e in exc_pts), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fatou: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

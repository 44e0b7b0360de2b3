"""Command-line front end.

Exit codes: 0 pass, 2 input error, 3 no convergence, 4 audit failure,
5 statistical rejection.

Reports are JSON with sorted keys and embed the resolved configuration.
Wall-clock data (timestamps, durations, backend) goes to a sidecar
``<report>.meta.json`` so that a report depends only on its inputs.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import active_threads, backend
from .circle import CircleMeasure, GFunction, compute_g_measure, radon_nikodym_check
from .errors import HirschError, NoConvergence
from .foliation import FoliatedPoint, MetricFamily, pants_shape_at, sigma_symmetry_audit
from .pants import (AuditResult, ChartPoint, PantsShape, laplace_residual, run_shape_audits,
                    shape_json)

# diffusion and measures pull in numba and scipy.stats; they are imported
# inside the commands that use them to keep `gmeasure` and `audit` light.

EXIT_OK, EXIT_INPUT, EXIT_NOCONV, EXIT_AUDIT, EXIT_REJECT = 0, 2, 3, 4, 5
L_SNAP_TOL = 1e-6


class InputError(Exception):
    pass


def _emit(doc, path, meta):
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
        meta_path = Path(str(path) + ".meta.json")
        meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(text)


def _meta(t0, args=None):
    return {"version": __version__, "backend": backend(),
            "threads": active_threads(),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "elapsed_s": round(time.perf_counter() - t0, 3)}


def _config(args):
    # thread count only affects wall time, so it is recorded in the metadata
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "report", "threads")}


def _load_measure(spec):
    """A measure file, or ``uniform:LEVEL`` for the Lebesgue measure."""
    if spec.startswith("uniform:"):
        return CircleMeasure.uniform(int(spec.split(":", 1)[1]))
    return CircleMeasure.load(spec)


def _shape_from_args(args):
    """PantsShape from --L1/--L2 or from --g/--z; returns (shape, family or None)."""
    if args.L1 is not None or args.L2 is not None:
        if args.g is not None:
            raise InputError("give either --g or --L1/--L2, not both")
        if args.L1 is None or args.L2 is None:
            raise InputError("--L1 and --L2 go together")
        total = math.exp(-args.L1) + math.exp(-args.L2)
        if abs(total - 1.0) > L_SNAP_TOL:
            raise InputError(f"shape invariant violated: exp(-L1) + exp(-L2) = {total:.9g} != 1")
        return PantsShape.from_L1(args.L1, args.eps if args.eps is not None else 0.05), None
    if args.g is None:
        raise InputError("need --g or --L1/--L2")
    fam = MetricFamily.parse(args.g)
    if args.eps is not None:
        fam = MetricFamily(fam.g, args.eps)
    return pants_shape_at(fam, args.z), fam


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gmeasure(args):
    t0 = time.perf_counter()
    g = GFunction.parse(args.g)
    try:
        res = compute_g_measure(g, args.level, tol=args.tol, max_iter=args.max_iter)
    except NoConvergence as exc:
        _emit({"command": "gmeasure", "config": _config(args), "status": "no_convergence",
               "error": str(exc), "details": exc.details}, args.report, _meta(t0, args))
        return EXIT_NOCONV
    mu = res.measure
    if args.out:
        mu.save(args.out)
    arc = min(8, args.level - 2)
    doc = {"command": "gmeasure", "config": _config(args), "status": "converged",
           "iterations": res.iterations, "residual": res.residual,
           "max_deviation_from_uniform": float(np.max(np.abs(mu.weights - 1.0 / mu.size))),
           "radon_nikodym": {"arc_level": arc, "max_residual": radon_nikodym_check(mu, g, arc)}
           if arc >= 2 else None}
    if args.log:
        with open(args.log, "w") as fh:
            fh.write("iteration,residual\n")
            for k, r in enumerate(res.history, 1):
                fh.write(f"{k},{r!r}\n")
    if args.density_csv:
        with open(args.density_csv, "w") as fh:
            fh.write("theta,density\n")
            for th, d in zip(mu.midpoints(), mu.weights * mu.size):
                fh.write(f"{th!r},{d!r}\n")
    _emit(doc, args.report, _meta(t0, args))
    return EXIT_OK


def cmd_audit(args):
    t0 = time.perf_counter()
    shape, fam = _shape_from_args(args)
    results = run_shape_audits(shape, args.grid)
    if fam is not None:
        dev = sigma_symmetry_audit(fam, args.z)
        results.append(AuditResult("sigma_symmetry", dev, None, dev <= 1e-12))
    failed = [r.check for r in results if not r.passed]
    doc = {"command": "audit", "config": _config(args), "shape": shape_json(shape),
           "audits": [r.to_json() for r in results], "failed": failed,
           "status": "pass" if not failed else "fail"}
    if args.residual_csv:
        with open(args.residual_csv, "w") as fh:
            fh.write("h,laplace_residual\n")
            for h in (1 / 16, 1 / 32, 1 / 64, 1 / 128):
                fh.write(f"{h!r},{laplace_residual(shape, h)!r}\n")
    _emit(doc, args.report, _meta(t0, args))
    if failed:
        sys.stderr.write("failed audits: " + ", ".join(failed) + "\n")
        return EXIT_AUDIT
    return EXIT_OK


def _parse_start(text):
    try:
        chart, u, v = text.split(",")
        return ChartPoint.cyl(int(chart), float(u), float(v))
    except ValueError as exc:
        raise InputError(f"--start expects CHART,U,V with CHART in {{1,2}}, got {text!r}") from exc


def cmd_simulate(args):
    from .diffusion import DiffusionConfig, EnsembleState, first_exit, run_ensemble, simulate_path
    from .measures import transverse_label
    t0 = time.perf_counter()
    shape, fam = _shape_from_args(args)
    start = _parse_start(args.start) if args.start else ChartPoint.cyl(1, 0.5, 0.5 * shape.L1)
    if args.first_exit:
        res = first_exit(shape, start, args.paths, args.dt, args.seed, threads=args.threads,
                         alternate_charts=args.alternate_charts)
        doc = {"command": "simulate", "mode": "first_exit", "config": _config(args),
               "shape": shape_json(shape), **res.to_json()}
        _emit(doc, args.report, _meta(t0, args))
        return EXIT_OK
    if fam is None:
        raise InputError("leafwise simulation needs a family (--g)")
    cfg = DiffusionConfig(args.dt, args.t_end, args.seed, max_events=args.max_events)
    if args.paths == 1:
        traj = simulate_path(fam, FoliatedPoint(args.z, start), cfg)
        if args.csv:
            Path(args.csv).write_text(traj.to_csv())
        hol = traj.holonomy_events
        doc = {"command": "simulate", "mode": "path", "config": _config(args),
               "samples": len(traj.samples), "holonomy_events": len(hol),
               "slit_events": len(traj.events) - len(hol),
               "final": {"t": traj.samples[-1][0], "z": traj.samples[-1][1].z,
                         "chart": int(traj.samples[-1][1].p.chart),
                         "u": traj.samples[-1][1].p.u, "v": traj.samples[-1][1].p.v}}
    else:
        n = args.paths
        st = EnsembleState.from_arrays(np.full(n, args.z), np.full(n, int(start.chart)),
                                       np.full(n, start.u), np.full(n, start.v))
        res = run_ensemble(fam, st, cfg, threads=args.threads)
        hist, _ = np.histogram(transverse_label(res.state.z), bins=64, range=(0.0, 1.0))
        doc = {"command": "simulate", "mode": "ensemble", "config": _config(args),
               "summary": res.summary(), "label_histogram_64": hist.tolist(),
               "seeds": {"seed": args.seed, "first_path": 0, "last_path": n - 1}}
    _emit(doc, args.report, _meta(t0, args))
    return EXIT_OK


def cmd_stationarity(args):
    from .diffusion import DiffusionConfig
    from .measures import HarmonicMeasure, stationarity_test
    t0 = time.perf_counter()
    if args.paths < 1:
        raise InputError("--paths must be positive")
    fam = MetricFamily.parse(args.g)
    hm = HarmonicMeasure(fam, _load_measure(args.mu))
    cfg = DiffusionConfig(args.dt, args.t_end, args.seed, max_events=args.max_events)
    rep = stationarity_test(hm, cfg, args.paths, args.alpha, threads=args.threads,
                            replicates=args.bootstrap)
    doc = {"command": "stationarity", "config": _config(args), "report": rep.to_json()}
    _emit(doc, args.report, _meta(t0, args))
    return EXIT_OK if rep.passed else EXIT_REJECT


def cmd_distinct(args):
    from .measures import HarmonicMeasure, distinctness_test
    t0 = time.perf_counter()
    fam1 = MetricFamily.parse(args.g)
    fam2 = MetricFamily.parse(args.g2) if args.g2 else fam1
    d = distinctness_test(HarmonicMeasure(fam1, _load_measure(args.mu1)),
                          HarmonicMeasure(fam2, _load_measure(args.mu2)))
    doc = {"command": "distinct", "config": _config(args), "wasserstein1": d,
           "distinct": d > 0}
    _emit(doc, args.report, _meta(t0, args))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="hirschlab",
                                description="g-measures, pants geometry and leafwise diffusion "
                                            "on the Hirsch foliation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, report=True):
        if report:
            sp.add_argument("--report", help="write the JSON report here (default: stdout)")

    def shape_opts(sp):
        sp.add_argument("--g", help="family spec, e.g. sine:a=0.5,eps=0.05")
        sp.add_argument("--z", type=float, default=0.0, help="fiber coordinate (with --g)")
        sp.add_argument("--L1", type=float)
        sp.add_argument("--L2", type=float)
        sp.add_argument("--eps", type=float, help="slit length")

    def stochastic(sp):
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--dt", type=float, default=1e-3)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: HIRSCHLAB_THREADS or all cores)")
        sp.add_argument("--max-events", type=int, default=1_000_000)

    sp = sub.add_parser("gmeasure", help="compute a g-measure by power iteration")
    sp.add_argument("--g", required=True)
    sp.add_argument("--level", type=int, default=12)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--max-iter", type=int, default=10000)
    sp.add_argument("--out", help="measure JSON output file")
    sp.add_argument("--log", help="convergence log CSV")
    sp.add_argument("--density-csv", help="theta,density CSV for plotting")
    common(sp)
    sp.set_defaults(func=cmd_gmeasure)

    sp = sub.add_parser("audit", help="geometry audits for one pants")
    shape_opts(sp)
    sp.add_argument("--grid", type=int, default=256)
    sp.add_argument("--residual-csv", help="h,laplace_residual CSV for plotting")
    common(sp)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("simulate", help="leafwise Brownian motion")
    shape_opts(sp)
    stochastic(sp)
    sp.add_argument("--start", help="CHART,U,V with CHART in {1,2} (default: 1,0.5,L1/2)")
    sp.add_argument("--t-end", type=float, default=1.0)
    sp.add_argument("--paths", type=int, default=1)
    sp.add_argument("--csv", help="trajectory CSV (single path)")
    sp.add_argument("--first-exit", action="store_true",
                    help="stop at the first boundary hit of a fixed pants")
    sp.add_argument("--alternate-charts", action="store_true",
                    help="with --first-exit, start odd paths in the other cylinder")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("stationarity", help="test a candidate harmonic measure")
    sp.add_argument("--g", required=True)
    sp.add_argument("--mu", required=True, help="measure JSON file or uniform:LEVEL")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--t-end", type=float, default=5.0)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--bootstrap", type=int, default=200, help="bootstrap replicates")
    stochastic(sp)
    common(sp)
    sp.set_defaults(func=cmd_stationarity)

    sp = sub.add_parser("distinct", help="W1 distance between two candidate measures")
    sp.add_argument("--g", required=True)
    sp.add_argument("--g2", help="family of the second measure (default: --g)")
    sp.add_argument("--mu1", required=True)
    sp.add_argument("--mu2", required=True)
    common(sp)
    sp.set_defaults(func=cmd_distinct)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NoConvergence as exc:
        sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return EXIT_NOCONV
    except (HirschError, InputError, ValueError, OSError) as exc:
        code = getattr(exc, "code", "INPUT_ERROR")
        sys.stderr.write(f"error [{code}]: {exc}\n")
        return EXIT_INPUT


def entry():  # console script
    sys.exit(main())


if __name__ == "__main__":
    entry()

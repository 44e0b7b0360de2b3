"""Leafwise Brownian motion with generator the Laplacian (not half of it).

Walkers move in the two cylinder charts. In the half-plane coordinate
y = exp(L - v) each cylinder is a piece of the hyperbolic plane, so the
Euler step only ever sees the flat generator y^2 (d_u^2 + d_y^2). The
collar chart is never used by the walker.

Single paths go through the scalar kernel so that every crossing can be
logged. Ensembles go through the kernel selected by ``HIRSCHLAB_BACKEND``;
both draw their noise from the counter generator keyed by
(seed, path index, step index), so runs do not depend on scheduling.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _walk
from ._accel import backend, set_threads, default_threads
from .errors import InvalidConfig, InvalidShape, MaxEventsExceeded, StepUnderflow
from .foliation import (INWARD, OUTWARD, FoliatedPoint, HolonomyEvent, MetricFamily,
                        pants_shape_at)
from .pants import Boundary, Chart, ChartPoint, PantsShape


@dataclass(frozen=True)
class DiffusionConfig:
    dt: float
    t_end: float
    seed: int
    cone_guard: float = 1e-6
    max_events: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.dt <= 1e-2:
            raise InvalidConfig(f"dt must lie in (0, 1e-2], got {self.dt}")
        if not self.t_end >= 0:
            raise InvalidConfig(f"t_end must be nonnegative, got {self.t_end}")
        if not self.cone_guard > 0:
            raise InvalidConfig("cone_guard must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.max_events < 0:
            raise InvalidConfig("max_events must be nonnegative")

    def to_json(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def _cyl_length(shape: PantsShape, chart):
    chart = Chart(chart)
    if chart == Chart.COLLAR:
        raise InvalidShape("the walker lives on the cylinder charts")
    return shape.length(chart)


def halfplane_coords(shape: PantsShape, p: ChartPoint):
    """(u, y) with y = exp(L_i - v), so the cylinder metric is (du^2 + dy^2)/y^2."""
    return p.u, math.exp(_cyl_length(shape, p.chart) - p.v)


def from_halfplane(shape: PantsShape, chart, u: float, y: float) -> ChartPoint:
    return ChartPoint(Chart(chart), u, _cyl_length(shape, chart) - math.log(y))


def _increment(L, v, dt, n1, n2):
    du, dv, h, status = _walk.euler_increment_np(
        np.zeros(np.shape(v), dtype=np.int64), np.asarray(v, dtype=float),
        np.full(np.shape(v), L), np.full(np.shape(v), L), dt,
        np.asarray(n1, dtype=float), np.asarray(n2, dtype=float))
    if np.any(status != _walk.OK):
        raise StepUnderflow("step halving exceeded 40 levels")
    return du, dv


def step(shape: PantsShape, p: ChartPoint, dt: float, noise) -> ChartPoint:
    """One in-chart Euler-Maruyama step driven by two standard normals.

    u' = u + sqrt(2 dt) y N1 and y' = y (1 + sqrt(2 dt) N2); if y' <= 0 the
    step is retried with dt halved (same noise). Boundaries are not handled
    here, u is taken mod 1.
    """
    if dt == 0:
        return p
    L = _cyl_length(shape, p.chart)
    du, dv = _increment(L, np.array([p.v]), dt, [noise[0]], [noise[1]])
    return ChartPoint(p.chart, float((p.u + du[0]) % 1.0), float(p.v + dv[0]))


def step_many(shape: PantsShape, chart, u, v, dt, n1, n2):
    """Vectorised ``step`` for one chart: returns (u', v')."""
    L = _cyl_length(shape, chart)
    v = np.asarray(v, dtype=float)
    du, dv = _increment(L, v, dt, n1, n2)
    return np.mod(np.asarray(u) + du, 1.0), v + dv


# ---------------------------------------------------------------------------
# single trajectories
# ---------------------------------------------------------------------------

_EVENT_BOUNDARY = {_walk.EV_D3: Boundary.D3, _walk.EV_D1: Boundary.D1, _walk.EV_D2: Boundary.D2}


@dataclass(frozen=True)
class SlitEvent:
    v: float
    z: float
    t: float = 0.0


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)   # (t, FoliatedPoint)
    events: list = field(default_factory=list)    # HolonomyEvent | SlitEvent
    flags: list = field(default_factory=list)     # crossings during the step ending at sample k

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "z_theta", "chart", "u", "v", "event_flag"])
        for (t, fp), flag in zip(self.samples, self.flags):
            w.writerow([repr(float(t)), repr(float(fp.z)), int(fp.p.chart),
                        repr(float(fp.p.u)), repr(float(fp.p.v)), int(flag)])
        return buf.getvalue()

    @property
    def holonomy_events(self):
        return [e for e in self.events if isinstance(e, HolonomyEvent)]


def _check_start(fam: MetricFamily, start: FoliatedPoint):
    shape = pants_shape_at(fam, start.z)
    if start.p.chart == Chart.COLLAR:
        raise InvalidShape("start must be given in a cylinder chart")
    start.p.check(shape)
    return shape


def simulate_path(fam: MetricFamily, start: FoliatedPoint, cfg: DiffusionConfig,
                  path: int = 0) -> Trajectory:
    """Run one walker to ``cfg.t_end`` and log every sample and crossing."""
    _check_start(fam, start)
    kind, a, tab = fam.g.kernel_args()
    nsteps = int(math.ceil(cfg.t_end / cfg.dt - 1e-9)) if cfg.t_end > 0 else 0
    samples = np.zeros((nsteps + 1, 6))
    events = np.zeros((min(cfg.max_events, 4 * nsteps) + 64, 5))
    n_s, n_e, status = _walk.record_path(
        float(start.z), int(start.p.chart), float(start.p.u), float(start.p.v),
        float(cfg.t_end), float(cfg.dt), np.uint64(cfg.seed), np.uint64(path), kind, a, tab,
        fam.eps, cfg.cone_guard, cfg.max_events, samples, events)
    _raise_status(status)
    traj = Trajectory()
    for row in samples[:n_s]:
        p = ChartPoint(Chart(int(row[2])), float(row[3]), float(row[4]))
        traj.samples.append((float(row[0]), FoliatedPoint(float(row[1]), p)))
        traj.flags.append(int(row[5]))
    for t, k, theta, z0, z1 in events[:min(n_e, events.shape[0])]:
        k = int(k)
        if k == _walk.EV_SLIT:
            traj.events.append(SlitEvent(v=float(theta), z=float(z0), t=float(t)))
        else:
            traj.events.append(HolonomyEvent(_EVENT_BOUNDARY[k], float(theta), float(z0), float(z1),
                                             OUTWARD if k == _walk.EV_D3 else INWARD, float(t)))
    return traj


def _raise_status(status):
    status = np.atleast_1d(status)
    if np.any(status == _walk.UNDERFLOW):
        raise StepUnderflow("step halving exceeded 40 levels", paths=np.nonzero(status == 1)[0][:10].tolist())
    if np.any((status == _walk.TOO_MANY_EVENTS) | (status == _walk.SEGMENT_OVERFLOW)):
        raise MaxEventsExceeded("event budget exhausted")


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

@dataclass
class EnsembleState:
    z: np.ndarray
    chart: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_arrays(cls, z, chart, u, v):
        return cls(np.array(z, dtype=float), np.array(chart, dtype=np.int64),
                   np.array(u, dtype=float), np.array(v, dtype=float))

    def __len__(self):
        return self.z.size


@dataclass
class EnsembleResult:
    state: EnsembleState
    counts: np.ndarray    # per path: outward, inward, slit crossings
    backend: str

    def summary(self):
        c = self.counts
        return {"paths": int(c.shape[0]), "outward": int(c[:, 0].sum()),
                "inward": int(c[:, 1].sum()), "slit": int(c[:, 2].sum()),
                "final_chart_histogram": np.bincount(self.state.chart, minlength=2).tolist()}


def run_ensemble(fam: MetricFamily, start: EnsembleState, cfg: DiffusionConfig,
                 path_offset: int = 0, threads: int | None = None) -> EnsembleResult:
    """Evolve every walker in ``start`` to ``cfg.t_end``; path i uses index offset + i."""
    st = EnsembleState.from_arrays(start.z, start.chart, start.u, start.v)
    n = len(st)
    counts = np.zeros((n, 3), dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    kind, a, tab = fam.g.kernel_args()
    args = (st.z, st.chart, st.u, st.v, float(cfg.t_end), float(cfg.dt), np.uint64(cfg.seed),
            np.uint64(path_offset), kind, a, tab, fam.eps, cfg.cone_guard, cfg.max_events,
            counts, status)
    which = backend()
    if which == "numba":
        set_threads(threads or default_threads())
        _walk.walk_ensemble_nb(*args)
    else:
        _walk.walk_ensemble_np(*args)
    _raise_status(status)
    return EnsembleResult(st, counts, which)


# ---------------------------------------------------------------------------
# first exit from a fixed pants
# ---------------------------------------------------------------------------

EXIT_NAMES = ("D1", "D2", "D3")


@dataclass
class ExitResult:
    """First-exit sample. ``phi_raw`` is exp(-v) at the end of the stopping
    step before projection onto the boundary; exp(-v) is an exact martingale
    of the discrete chain, so mean(phi_exit - phi_raw) estimates the bias of
    mean(phi_exit) with far less noise than the direct estimate."""
    shape: PantsShape
    start: ChartPoint
    dt: float
    code: np.ndarray
    phi_exit: np.ndarray
    phi_raw: np.ndarray
    t_exit: np.ndarray

    @property
    def n(self):
        return self.code.size

    def mean_phi(self):
        return float(self.phi_exit.mean())

    def stderr(self):
        return float(self.phi_exit.std(ddof=1) / math.sqrt(self.n))

    def bias(self):
        """(estimate, standard error) of E[phi(exit)] - phi(start)."""
        d = self.phi_exit - self.phi_raw
        return float(d.mean()), float(d.std(ddof=1) / math.sqrt(self.n))

    def histogram(self):
        return {name: int(np.sum(self.code == k)) for k, name in enumerate(EXIT_NAMES)}

    def to_json(self):
        phi0 = math.exp(-self.start.v)
        b, b_se = self.bias()
        return {"paths": self.n, "dt": self.dt, "exit_histogram": self.histogram(),
                "mean_phi_exit": self.mean_phi(), "phi_start": phi0,
                "stderr": self.stderr(), "bias_estimate": b, "bias_stderr": b_se,
                "mean_exit_time": float(self.t_exit.mean())}


def first_exit(shape: PantsShape, start: ChartPoint, n_paths: int, dt: float, seed: int,
               bridge: bool = True, cone_guard: float = 1e-6, max_steps: int = 10 ** 7,
               threads: int | None = None, spread_u: bool = True,
               alternate_charts: bool = False) -> ExitResult:
    """Run ``n_paths`` walkers from ``start`` until they first reach the boundary.

    With ``spread_u`` the starting u is spread over the circle (golden-ratio
    sequence); the exit law of phi does not depend on u. With
    ``alternate_charts`` odd paths start at sigma(start). ``bridge`` adds the
    Brownian-bridge test for boundary excursions inside a step.
    """
    if start.chart == Chart.COLLAR:
        raise InvalidShape("start must be given in a cylinder chart")
    start.check(shape)
    DiffusionConfig(dt, 0.0, seed, cone_guard)
    n = int(n_paths)
    idx = np.arange(n)
    u0 = np.mod(start.u + idx * 0.6180339887498949, 1.0) if spread_u else np.full(n, start.u)
    c0 = np.full(n, int(start.chart), dtype=np.int64)
    if alternate_charts:
        c0[1::2] = 1 - int(start.chart)
    v0 = np.full(n, start.v)
    code = np.zeros(n, dtype=np.int64)
    phi_exit, phi_raw, t_exit = np.zeros(n), np.zeros(n), np.zeros(n)
    status = np.zeros(n, dtype=np.int64)
    args = (c0, u0, v0, shape.L1, shape.L2, shape.eps, float(dt), np.uint64(seed), np.uint64(0),
            int(max_steps), bool(bridge), cone_guard, code, phi_exit, phi_raw, t_exit, status)
    if backend() == "numba":
        set_threads(threads or default_threads())
        _walk.first_exit_ensemble_nb(*args)
    else:
        _walk.first_exit_ensemble_np(*args)
    _raise_status(status)
    if np.any(status == _walk.NOT_EXITED):
        raise MaxEventsExceeded("some walkers did not exit within max_steps")
    return ExitResult(shape, start, dt, code, phi_exit, phi_raw, t_exit)

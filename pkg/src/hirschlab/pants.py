"""The hyperbolic pants P_{L1,L2} and its audits.

The surface is built from two cylinders C_i = S^1 x [0, L_i] with metric
exp(2 (v - L_i)) du^2 + dv^2, cut along u = 0, v in [0, eps] and glued
crosswise, which leaves a cone point of angle 4 pi at (u, v) = (0, eps).
Boundaries: D1 = top of C1 and D2 = top of C2 (positive horocycles of
length 1), D3 = bottoms of both cylinders joined into one negative horocycle
of length exp(-L1) + exp(-L2) = 1.

A third chart, COLLAR, is the punctured-disc model
|ds| = |dx| / (|x| (2 pi + log 1/|x|)) near D3, used only by the audits.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AtConePoint, InvalidShape, SingularPoint

SHAPE_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class Chart(enum.IntEnum):
    CYL1 = 0
    CYL2 = 1
    COLLAR = 2


class Boundary(enum.Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"


@dataclass(frozen=True)
class PantsShape:
    L1: float
    L2: float
    eps: float = 0.05

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0):
            raise InvalidShape(f"cylinder lengths must be positive, got ({self.L1}, {self.L2})")
        total = math.exp(-self.L1) + math.exp(-self.L2)
        if abs(total - 1.0) > SHAPE_TOL:
            raise InvalidShape(
                f"exp(-L1) + exp(-L2) = {total:.15g} != 1 (L1={self.L1}, L2={self.L2})")
        if not 0 < self.eps <= min(self.L1, self.L2):
            raise InvalidShape(f"slit length eps={self.eps} must lie in (0, min(L1, L2)]")

    @classmethod
    def from_L1(cls, L1, eps=0.05):
        """The shape with the given L1 and L2 fixed by exp(-L1) + exp(-L2) = 1."""
        return cls(L1, -math.log1p(-math.exp(-L1)), eps)

    def length(self, chart):
        return self.L1 if Chart(chart) == Chart.CYL1 else self.L2

    def swapped(self):
        return PantsShape(self.L2, self.L1, self.eps)

    @property
    def cone(self):
        return (0.0, self.eps)


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    u: float = 0.0
    v: float = 0.0
    x: complex = 0j

    @classmethod
    def cyl(cls, i, u, v):
        """Point (u, v) of cylinder C_i, i in {1, 2}."""
        return cls(Chart.CYL1 if i == 1 else Chart.CYL2, float(u) % 1.0, float(v))

    @classmethod
    def collar(cls, x):
        return cls(Chart.COLLAR, x=complex(x))

    def is_cone(self, shape):
        return self.chart != Chart.COLLAR and self.u == 0.0 and self.v == shape.eps

    def check(self, shape):
        if self.chart == Chart.COLLAR:
            r = abs(self.x)
            if not math.exp(-TWO_PI) < r <= 1.0:
                raise ValueError(f"collar point |x|={r} outside (exp(-2 pi), 1]")
        elif not (0.0 <= self.u < 1.0 and 0.0 <= self.v <= shape.length(self.chart)):
            raise ValueError(f"chart point {self} outside its cylinder")
        return self


def collar_lambda(r):
    """Conformal factor of the collar metric at radius r = |x|."""
    r = np.asarray(r, dtype=float)
    return 1.0 / (r * (TWO_PI + np.log(1.0 / r)))


def metric_at(shape: PantsShape, p: ChartPoint) -> np.ndarray:
    """Metric tensor in chart coordinates ((u, v) or (Re x, Im x))."""
    if p.chart == Chart.COLLAR:
        lam = float(collar_lambda(abs(p.x)))
        return lam * lam * np.eye(2)
    if p.is_cone(shape):
        raise SingularPoint("the cone point has no metric tensor")
    L = shape.length(p.chart)
    return np.diag([math.exp(2.0 * (p.v - L)), 1.0])


def harmonic_phi(shape: PantsShape, p: ChartPoint) -> float:
    """phi = exp(-v) on each cylinder; 1 + log(1/|x|) / (2 pi) on the collar."""
    if p.chart == Chart.COLLAR:
        return 1.0 + math.log(1.0 / abs(p.x)) / TWO_PI
    return math.exp(-p.v)


# --- boundaries -------------------------------------------------------------

def d3_locate(shape: PantsShape, theta: float):
    """Chart point on D3 at normalised arclength theta in [0, 1).

    [0, e^{-L1}) is the bottom of C1, the rest the bottom of C2.
    """
    theta = theta % 1.0
    e1 = math.exp(-shape.L1)
    if theta < e1:
        return ChartPoint(Chart.CYL1, min(theta * math.exp(shape.L1), math.nextafter(1.0, 0.0)), 0.0)
    u = (theta - e1) * math.exp(shape.L2)
    return ChartPoint(Chart.CYL2, min(u, math.nextafter(1.0, 0.0)), 0.0)


def d3_param(shape: PantsShape, p: ChartPoint) -> float:
    if p.chart == Chart.CYL1:
        return p.u * math.exp(-shape.L1)
    return (math.exp(-shape.L1) + p.u * math.exp(-shape.L2)) % 1.0


def boundary_length(shape: PantsShape, b, n=256, part=None) -> float:
    """Length of a boundary component by midpoint quadrature of sqrt(g_uu).

    ``part`` selects a sub-arc of D3: ``Chart.CYL1`` or ``Chart.CYL2``.
    """
    b = Boundary(b)
    u = (np.arange(n) + 0.5) / n

    def circle(L, v):
        return float(np.sum(np.sqrt(np.exp(2.0 * (v - L)) * np.ones_like(u)))) / n

    if b == Boundary.D1:
        return circle(shape.L1, shape.L1)
    if b == Boundary.D2:
        return circle(shape.L2, shape.L2)
    parts = {Chart.CYL1: circle(shape.L1, 0.0), Chart.CYL2: circle(shape.L2, 0.0)}
    if part is not None:
        return parts[Chart(part)]
    return parts[Chart.CYL1] + parts[Chart.CYL2]


# --- audits -----------------------------------------------------------------

@dataclass
class AuditResult:
    check: str
    residual: float
    grid: float | None
    passed: bool
    detail: dict | None = None

    def to_json(self):
        out = {"check": self.check, "residual": self.residual, "grid": self.grid,
               "pass": bool(self.passed)}
        if self.detail:
            out["detail"] = self.detail
        return out


def area(shape: PantsShape, quadrature_grid: int = 256) -> float:
    """Area by n x n midpoint quadrature of the area form exp(v - L_i) du dv."""
    total = 0.0
    n = quadrature_grid
    for L in (shape.L1, shape.L2):
        v = (np.arange(n) + 0.5) * (L / n)
        u_weights = np.full(n, 1.0 / n)
        total += float(np.outer(u_weights, np.exp(v - L)).sum() * (L / n))
    return total


def area_closed_form(shape: PantsShape) -> float:
    return 2.0 - math.exp(-shape.L1) - math.exp(-shape.L2)


def phi_mass_quadrature(shape: PantsShape, n: int = 256) -> float:
    """int phi dvol over the pants, by midpoint quadrature."""
    total = 0.0
    for L in (shape.L1, shape.L2):
        v = (np.arange(n) + 0.5) * (L / n)
        dens = np.exp(-v) * np.exp(v - L)
        total += float(np.outer(np.full(n, 1.0 / n), dens).sum() * (L / n))
    return total


CONE_ANGLE = 4.0 * math.pi
EULER_CHAR = -1


def gauss_bonnet_audit(shape: PantsShape, quadrature: bool = False, n: int = 256,
                       tol: float | None = None) -> AuditResult:
    """Check int K dA + int k_g ds + (2 pi - cone angle) = 2 pi chi.

    Closed form: K = -1, k_g = +1 on D1, D2 and -1 on D3. With ``quadrature``
    the area, the lengths, K (from finite differences of the circumference
    function) and k_g (its log-derivative) are all computed numerically.
    """
    if not quadrature:
        total = (-area_closed_form(shape)
                 + (1.0 + 1.0 - (math.exp(-shape.L1) + math.exp(-shape.L2)))
                 + (TWO_PI - CONE_ANGLE))
        tol = 1e-10 if tol is None else tol
        res = abs(total - TWO_PI * EULER_CHAR)
        return AuditResult("gauss_bonnet", res, None, res <= tol)

    delta = 1e-4
    curv_integral = 0.0
    for L in (shape.L1, shape.L2):
        v = (np.arange(n) + 0.5) * (L / n)
        s = np.exp(v - L)
        s_pp = (np.exp(v + delta - L) - 2.0 * s + np.exp(v - delta - L)) / delta ** 2
        K = -s_pp / s
        curv_integral += float(np.sum(K * s) * (L / n))  # u-integral is 1

    def kg(L, v):  # d/dv log(circumference)
        return (math.log(math.exp(v + delta - L)) - math.log(math.exp(v - delta - L))) / (2 * delta)

    boundary_term = (kg(shape.L1, shape.L1) * boundary_length(shape, "D1", n)
                     + kg(shape.L2, shape.L2) * boundary_length(shape, "D2", n)
                     - kg(shape.L1, 0.0) * boundary_length(shape, "D3", n, part=Chart.CYL1)
                     - kg(shape.L2, 0.0) * boundary_length(shape, "D3", n, part=Chart.CYL2))
    cone_term = TWO_PI - cone_angle_numeric()
    res = abs(curv_integral + boundary_term + cone_term - TWO_PI * EULER_CHAR)
    tol = 1e-4 if tol is None else tol
    return AuditResult("gauss_bonnet_quadrature", res, 1.0 / n, res <= tol)


def cone_angle_numeric(r: float = 0.1, n: int = 512) -> float:
    """Total angle at the cone point from the model metric |x|^2 |dx|^2.

    Circumference of the coordinate circle of radius r divided by its
    geodesic radius int_0^r s ds.
    """
    circ = float(np.sum(np.full(n, r) * r) * 2.0 * math.pi / n)  # |x| * r dtheta
    nodes, weights = np.polynomial.legendre.leggauss(16)
    s = 0.5 * r * (nodes + 1.0)
    radius = float(0.5 * r * np.sum(weights * s))
    return circ / radius


def smoothing_profile_audit(r_inner: float, rho=None, samples: int = 64) -> AuditResult:
    """Check that rho(x) |x|^2 |dx|^2 is the flat metric for 0 < |x| < r_inner.

    rho defaults to 1/|x|^2. The result also carries the cone angle of the
    unsmoothed metric |x|^2 |dx|^2.
    """
    if not 0 < r_inner < 1:
        raise ValueError("r_inner must lie in (0, 1)")
    if rho is None:
        def rho(r):
            return 1.0 / r ** 2
    r = r_inner * (np.arange(samples) + 0.5) / samples
    rr = np.repeat(r, samples)  # tensor is rotation invariant; repeat per angle
    tensors = (rho(rr) * rr ** 2)[:, None, None] * np.eye(2)
    dev = float(np.max(np.abs(tensors - np.eye(2))))
    angle = cone_angle_numeric(min(0.5 * r_inner, 0.1))
    return AuditResult("smoothing_profile", dev, r_inner / samples, dev <= 1e-12,
                       {"cone_angle": angle, "cone_angle_error": abs(angle - CONE_ANGLE),
                        "min_tensor_eig": float(np.min(tensors[:, 0, 0]))})


def slit_crossing(shape: PantsShape, from_chart, side: str, v: float):
    """Cross the slit u = 0, 0 <= v < eps, from one side of one cylinder.

    The right side (u -> 0+) of C1 is glued to the left side (u -> 1-) of C2
    and vice versa; v is arclength along the slit and is preserved. Returns
    ``(chart, side, v)``.
    """
    from_chart = Chart(from_chart)
    if from_chart == Chart.COLLAR:
        raise ValueError("the slit lives in the cylinder charts")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if v == shape.eps:
        raise AtConePoint(f"v = eps = {shape.eps} is the cone point")
    if not 0.0 <= v < shape.eps:
        raise ValueError(f"v={v} is not on the slit [0, {shape.eps})")
    other = Chart.CYL2 if from_chart == Chart.CYL1 else Chart.CYL1
    return other, ("left" if side == "right" else "right"), v


# --- Laplace-Beltrami residuals ---------------------------------------------

def _cyl_ghost_eval(shape, f, chart, u, v):
    """Evaluate f(chart, u, v) with u possibly outside [0, 1): wrap, or cross the slit."""
    chart = np.asarray(chart)
    out_u = np.mod(u, 1.0)
    crossed = (u < 0.0) | (u >= 1.0)
    on_slit = crossed & (v < shape.eps)
    other = np.where(chart == Chart.CYL1, Chart.CYL2, Chart.CYL1)
    Lc = np.where(chart == Chart.CYL1, shape.L1, shape.L2)
    Lo = np.where(other == Chart.CYL1, shape.L1, shape.L2)
    scale = np.exp(Lo - Lc)
    over = np.where(u < 0.0, u, u - 1.0) * scale  # signed excess beyond the line
    slit_u = np.where(u < 0.0, 1.0 + over, over)
    new_chart = np.where(on_slit, other, chart)
    new_u = np.where(on_slit, slit_u, out_u)
    return f(new_chart, new_u, v)


def laplace_residual(shape: PantsShape, grid_h: float, f=None, form: str = "expanded",
                     cone_radius_factor: float = 4.0):
    """max |Delta_h f| over an interior grid of both cylinder charts.

    ``f(chart, u, v)`` defaults to phi = exp(-v). With metric
    diag(s(v)^2, 1), s = exp(v - L), the Laplace-Beltrami operator is
    f_uu / s^2 + f_vv + (s'/s) f_v. ``form="expanded"`` uses central
    differences on that expression; ``form="divergence"`` uses
    (1/s) d_v(s d_v f) with s at half-grid points, for which exp(-v) is
    exactly discrete-harmonic.
    """
    if f is None:
        def f(chart, u, v):
            return np.exp(-np.asarray(v, dtype=float)) + 0.0 * np.asarray(u, dtype=float)
    h = float(grid_h)
    m = int(round(1.0 / h))
    worst = 0.0
    for chart in (Chart.CYL1, Chart.CYL2):
        L = shape.length(chart)
        nv = int(math.floor(L / h - 1e-9))
        v1 = h * np.arange(1, nv)
        v1 = v1[v1 <= L - h]
        u1 = (np.arange(m) + 0.5) * h
        U, V = np.meshgrid(u1, v1, indexing="ij")
        du = np.minimum(U, 1.0 - U) * np.exp(V - L)
        keep = np.hypot(du, V - shape.eps) > cone_radius_factor * h
        U, V = U[keep], V[keep]
        C = np.full(U.shape, int(chart))
        f0 = f(C, U, V)
        fe = _cyl_ghost_eval(shape, f, C, U + h, V)
        fw = _cyl_ghost_eval(shape, f, C, U - h, V)
        fn = f(C, U, V + h)
        fs = f(C, U, V - h)
        s = np.exp(V - L)
        uu = (fe - 2.0 * f0 + fw) / (h * h) / (s * s)
        if form == "expanded":
            vv = (fn - 2.0 * f0 + fs) / (h * h) + (fn - fs) / (2.0 * h)
        elif form == "divergence":
            sp, sm = np.exp(V + 0.5 * h - L), np.exp(V - 0.5 * h - L)
            vv = (sp * (fn - f0) - sm * (f0 - fs)) / (h * h) / s
        else:
            raise ValueError(f"unknown stencil form {form!r}")
        if U.size:
            worst = max(worst, float(np.max(np.abs(uu + vv))))
    return worst


def collar_laplace_residual(grid_h: float, f=None, r_min: float = 0.25):
    """max |lambda^-2 Delta_eucl f| on a square grid inside r_min <= |x| <= 1 - h."""
    if f is None:
        def f(x, y):
            return 1.0 + np.log(1.0 / np.hypot(x, y)) / TWO_PI
    h = float(grid_h)
    g = np.arange(-1.0, 1.0 + h / 2, h)
    X, Y = np.meshgrid(g, g, indexing="ij")
    R = np.hypot(X, Y)
    keep = (R >= r_min) & (R <= 1.0 - h)
    X, Y, R = X[keep], Y[keep], R[keep]
    lap = (f(X + h, Y) + f(X - h, Y) + f(X, Y + h) + f(X, Y - h) - 4.0 * f(X, Y)) / (h * h)
    lam = collar_lambda(R)
    return float(np.max(np.abs(lap / lam ** 2)))


def collar_curvature(r, log_lambda=None, delta_rel: float = 1e-2):
    """Gaussian curvature K = -lambda^-2 Delta log lambda at points (r, 0).

    Uses a fourth-order five-point-per-axis finite difference of log lambda.
    """
    if log_lambda is None:
        def log_lambda(x, y):
            return np.log(collar_lambda(np.hypot(x, y)))
    r = np.asarray(r, dtype=float)
    d = delta_rel * r
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    offs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    lap = np.zeros_like(r)
    for ck, ok in zip(c, offs):
        lap += ck * (log_lambda(r + ok * d, 0.0 * r) + log_lambda(r, ok * d))
    lap /= d * d
    lam = np.exp(log_lambda(r, 0.0 * r))
    return -lap / lam ** 2


def collar_curvature_audit(samples: int = 100, tol: float = 1e-6) -> AuditResult:
    r = np.exp(-TWO_PI) * np.exp(TWO_PI * (np.arange(samples) + 0.5) / samples)
    K = collar_curvature(r)
    res = float(np.max(np.abs(K + 1.0)))
    return AuditResult("collar_curvature", res, None, res <= tol, {"samples": samples})


def collar_circle_length(r: float = 1.0, n: int = 1024) -> float:
    return float(np.sum(collar_lambda(np.full(n, r)) * r) * 2.0 * math.pi / n)


def run_shape_audits(shape: PantsShape, grid: int = 256):
    """Every chart-level audit for one shape; returns a list of AuditResult."""
    out = []
    a = area(shape, grid)
    out.append(AuditResult("area", abs(a - 1.0), 1.0 / grid, abs(a - 1.0) <= 1e-6))
    for b in ("D1", "D2", "D3"):
        ln = boundary_length(shape, b, grid)
        out.append(AuditResult(f"boundary_length_{b}", abs(ln - 1.0), 1.0 / grid,
                               abs(ln - 1.0) <= 1e-10))
    mass = phi_mass_quadrature(shape, grid)
    exact = shape.L1 * math.exp(-shape.L1) + shape.L2 * math.exp(-shape.L2)
    out.append(AuditResult("phi_mass", abs(mass - exact), 1.0 / grid, abs(mass - exact) <= 1e-8))
    out.append(gauss_bonnet_audit(shape))
    out.append(gauss_bonnet_audit(shape, quadrature=True, n=grid))
    hs = (1 / 32, 1 / 64, 1 / 128)
    res = [laplace_residual(shape, h) for h in hs]
    ratios = [res[i] / res[i + 1] for i in range(2)]
    out.append(AuditResult("laplace_order_cyl", max(abs(q - 4.0) / 4.0 for q in ratios), hs[-1],
                           all(3.2 <= q <= 4.8 for q in ratios),
                           {"residuals": res, "ratios": ratios}))
    out.append(collar_curvature_audit())
    circ = collar_circle_length()
    out.append(AuditResult("collar_circle_length", abs(circ - 1.0), None, abs(circ - 1.0) <= 1e-10))
    out.append(smoothing_profile_audit(0.05))
    return out


def shape_json(shape: PantsShape):
    return asdict(shape)

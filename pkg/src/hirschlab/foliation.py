"""Assembly of the Hirsch foliation for T(z) = z^2.

The pants over z carries cylinder lengths L1(z) = log g(z) and
L2(z) = log g(z + 1/2). Points are stored on the double cover P x S^1; the
pairs (p, z) and (sigma p, z + 1/2) are the same point of the foliated
manifold, where sigma swaps the two cylinders.

Boundary parameters used by the crossing rules are *planar* angles on the
model pants: on D1 the parameter is u, on D2 it is u + 1/2, and on D3 it is
the normalised arclength shifted by ``d3_offset(z)`` so that sigma acts on
every boundary as a half turn. The gluing map (x, z) -> (x z / 4 + 1/2, z^2)
then reads: leave D3 over z at angle t, arrive on D1 over 2z at angle t + z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .circle import GFunction, _parse_params, antipode, doubling_map, validate_g
from .errors import InvalidGFunction, InvalidShape
from .pants import Boundary, Chart, ChartPoint, PantsShape, metric_at

OUTWARD = "outward"
INWARD = "inward"


@dataclass(frozen=True)
class MetricFamily:
    """z -> ds^2_z built from a g-function, with slit length ``eps``."""
    g: GFunction
    eps: float = 0.05

    def __post_init__(self):
        validate_g(self.g, 12)
        if not 0 < self.eps < self.g.log_inf():
            raise InvalidShape(
                f"need 0 < eps < inf log g = {self.g.log_inf():.6g}, got eps={self.eps}")

    @classmethod
    def parse(cls, spec):
        """``"sine:a=0.3,eps=0.05"``; eps may be omitted (default 0.05)."""
        spec = spec.strip()
        eps = None
        if ":" in spec and not spec.startswith("table:"):
            kind, params = spec.split(":", 1)
            kv = _parse_params(params)
            eps = kv.pop("eps", None)
            g_spec = kind if not kv else kind + ":" + ",".join(f"{k}={v!r}" for k, v in kv.items())
        elif spec.startswith("table:") and ",eps=" in spec:
            g_spec, tail = spec.rsplit(",eps=", 1)
            try:
                eps = float(tail)
            except ValueError as exc:
                raise InvalidGFunction(f"bad eps in {spec!r}", code="BAD_SPEC") from exc
        else:
            g_spec = spec
        g = GFunction.parse(g_spec)
        if eps is None:
            eps = min(0.05, 0.5 * g.log_inf())
        return cls(g, float(eps))

    @property
    def spec(self):
        return f"{self.g.spec},eps={self.eps!r}"

    def lengths(self, z):
        """(L1(z), L2(z)); accepts arrays."""
        return -np.log(self.g.recip(z)), -np.log(self.g.recip(antipode(z)))


def pants_shape_at(fam: MetricFamily, z: float) -> PantsShape:
    L1, L2 = fam.lengths(z)
    return PantsShape(float(L1), float(L2), fam.eps)


def d3_offset(shape: PantsShape) -> float:
    """Planar D3 angle = normalised arclength - offset (mod 1)."""
    return 0.5 * math.exp(-shape.L1) - 0.25


class FoliatedPoint(NamedTuple):
    z: float
    p: ChartPoint


class Crossing(NamedTuple):
    z: float
    boundary: Boundary
    theta: float


@dataclass(frozen=True)
class HolonomyEvent:
    boundary: Boundary
    theta_exit: float
    z_before: float
    z_after: float
    direction: str
    t: float = 0.0


def cross_outward(fam: MetricFamily, z: float, theta_exit: float) -> Crossing:
    """Leave through D3 over z at planar angle theta_exit; land on D1 over 2z."""
    return Crossing(doubling_map(z), Boundary.D1, (theta_exit + z) % 1.0)


def cross_inward(fam: MetricFamily, z: float, boundary, theta_exit: float) -> Crossing:
    """Leave through D1 or D2 over z at intrinsic position u = theta_exit.

    D1 over z is glued to D3 over z/2. D2 over z is D1 over z + 1/2 (via
    sigma x i) and so leads to D3 over (z + 1/2)/2. The arrival angle on D3
    undoes the rotation of the gluing map.
    """
    boundary = Boundary(boundary)
    if boundary == Boundary.D1:
        zz = z
    elif boundary == Boundary.D2:
        zz = antipode(z)
    else:
        raise ValueError("inward crossings leave through D1 or D2")
    w = 0.5 * zz
    return Crossing(w, Boundary.D3, (theta_exit - w) % 1.0)


def canonical(z: float, boundary, theta: float):
    """Representative of a boundary point modulo sigma x i with z in [0, 1/2).

    sigma swaps D1 and D2 keeping u; on D3 the planar angle shifts by 1/2.
    """
    boundary = Boundary(boundary)
    if z < 0.5:
        return z, boundary, theta
    if boundary == Boundary.D3:
        return z - 0.5, boundary, (theta + 0.5) % 1.0
    other = Boundary.D2 if boundary == Boundary.D1 else Boundary.D1
    return z - 0.5, other, theta


def sigma(p: ChartPoint) -> ChartPoint:
    """The involution swapping the two cylinders, (u, v) fixed."""
    if p.chart == Chart.COLLAR:
        return ChartPoint.collar(-p.x)
    return ChartPoint(Chart.CYL2 if p.chart == Chart.CYL1 else Chart.CYL1, p.u, p.v)


def sigma_symmetry_deviation(shape_a: PantsShape, shape_b: PantsShape, samples: int = 16) -> float:
    """max |metric_a(p) - metric_b(sigma p)| over a grid of cylinder points."""
    worst = 0.0
    for chart in (Chart.CYL1, Chart.CYL2):
        L = min(shape_a.length(chart), shape_b.length(Chart(1 - chart)))
        for u in np.arange(samples) / samples:
            for v in np.linspace(0.0, L, samples):
                p = ChartPoint(chart, float(u), float(v))
                if p.is_cone(shape_a) or sigma(p).is_cone(shape_b):
                    continue
                dev = np.max(np.abs(metric_at(shape_a, p) - metric_at(shape_b, sigma(p))))
                worst = max(worst, float(dev))
    return worst


def sigma_symmetry_audit(fam: MetricFamily, z: float, samples: int = 16) -> float:
    """Deviation between ds^2 over z and sigma^* ds^2 over z + 1/2."""
    return sigma_symmetry_deviation(pants_shape_at(fam, z), pants_shape_at(fam, antipode(z)), samples)

"""Transverse dynamics on the circle: the doubling map, the antipodal
involution, g-functions and g-measures.

Angles are turns, ``theta`` in [0, 1) standing for ``exp(2 pi i theta)``.
Measures are piecewise constant on the dyadic arcs ``[j/2^k, (j+1)/2^k)``.
"""
from __future__ import annotations

import functools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArcTooCoarse, InvalidGFunction, InvalidMeasure, NoConvergence

IDENTITY_TOL = 1e-12
MASS_TOL = 1e-12

KIND_CONST2 = 0
KIND_SINE = 1
KIND_TABLE = 2


def doubling_map(theta):
    """T(z) = z^2, i.e. theta -> 2 theta mod 1. Works on scalars and arrays."""
    return np.mod(2.0 * np.asarray(theta, dtype=float), 1.0) if np.ndim(theta) else (2.0 * theta) % 1.0


def antipode(theta):
    """i(z) = -z, i.e. theta -> theta + 1/2 mod 1."""
    return np.mod(np.asarray(theta, dtype=float) + 0.5, 1.0) if np.ndim(theta) else (theta + 0.5) % 1.0


# --------------------------------------------------------------------------
# g-functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GFunction:
    """A continuous g: S^1 -> (1, inf) with 1/g(z) + 1/g(-z) = 1.

    ``kind`` is one of ``"const2"``, ``"sine"`` (g = 2 / (1 + a sin 2 pi theta))
    or ``"table"`` (values of g at ``j / len(values)``). Tables are interpolated
    linearly in theta on 1/g, which keeps the identity exact between nodes.
    """
    kind: str
    a: float = 0.0
    values: tuple = ()
    source: str = ""

    def __post_init__(self):
        if self.kind not in ("const2", "sine", "table"):
            raise InvalidGFunction(f"unknown g-function kind {self.kind!r}", code="BAD_SPEC")
        if self.kind == "sine" and not abs(self.a) < 1.0:
            raise InvalidGFunction(f"sine family needs |a| < 1, got a={self.a}",
                                   code="NOT_GREATER_THAN_ONE")
        if self.kind == "table":
            n = len(self.values)
            if n < 2 or n & (n - 1):
                raise InvalidGFunction(f"table length must be a power of two >= 2, got {n}",
                                       code="BAD_SPEC")

    # constructors -----------------------------------------------------------
    @classmethod
    def constant2(cls):
        return cls("const2")

    @classmethod
    def sine(cls, a):
        return cls("sine", a=float(a))

    @classmethod
    def tabulated(cls, values, source=""):
        return cls("table", values=tuple(float(v) for v in values), source=source)

    @classmethod
    def parse(cls, spec):
        """Parse ``"const2"``, ``"sine:a=0.3"`` or ``"table:<path>"``."""
        spec = spec.strip()
        if spec == "const2":
            return cls.constant2()
        if spec.startswith("sine:"):
            params = _parse_params(spec[5:])
            if set(params) != {"a"}:
                raise InvalidGFunction(f"sine spec needs exactly a=<value>: {spec!r}", code="BAD_SPEC")
            return cls.sine(params["a"])
        if spec.startswith("table:"):
            path = Path(spec[6:])
            try:
                doc = json.loads(path.read_text())
            except (OSError, ValueError) as exc:
                raise InvalidGFunction(f"cannot read g table {path}: {exc}", code="BAD_SPEC") from exc
            values = doc["values"] if isinstance(doc, dict) else doc
            return cls.tabulated(values, source=str(path))
        raise InvalidGFunction(f"unrecognised g spec {spec!r}", code="BAD_SPEC")

    @property
    def spec(self):
        if self.kind == "const2":
            return "const2"
        if self.kind == "sine":
            return f"sine:a={self.a!r}"
        return f"table:{self.source}" if self.source else f"table:<{len(self.values)} values>"

    # evaluation -------------------------------------------------------------
    def recip(self, theta):
        """1/g(theta)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "const2":
            return np.full(theta.shape, 0.5) if theta.ndim else 0.5
        if self.kind == "sine":
            return 0.5 * (1.0 + self.a * np.sin(2.0 * np.pi * theta))
        r = self._recip_table
        n = r.size
        x = np.mod(theta, 1.0) * n
        j = np.floor(x).astype(np.int64) % n
        f = x - np.floor(x)
        return (1.0 - f) * r[j] + f * r[(j + 1) % n]

    def __call__(self, theta):
        return 1.0 / self.recip(theta)

    @functools.cached_property
    def _recip_table(self):
        return 1.0 / np.asarray(self.values, dtype=float)

    def log_inf(self):
        """Exact inf of log g where available (const2, sine), grid value for tables."""
        if self.kind == "const2":
            return math.log(2.0)
        if self.kind == "sine":
            return math.log(2.0 / (1.0 + abs(self.a)))
        return float(np.log(np.min(self.values)))

    def kernel_args(self):
        """(kind code, a, reciprocal table) for the compiled kernels."""
        if self.kind == "table":
            return KIND_TABLE, 0.0, np.ascontiguousarray(self._recip_table)
        kind = KIND_CONST2 if self.kind == "const2" else KIND_SINE
        return kind, float(self.a), np.zeros(1)


def _parse_params(text):
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        m = re.fullmatch(r"([A-Za-z_]\w*)\s*=\s*(\S+)", item)
        if not m:
            raise InvalidGFunction(f"bad parameter {item!r}", code="BAD_SPEC")
        try:
            out[m.group(1)] = float(m.group(2))
        except ValueError as exc:
            raise InvalidGFunction(f"bad number in {item!r}", code="BAD_SPEC") from exc
    return out


@dataclass(frozen=True)
class GValidation:
    grid_level: int
    min_g: float
    inf_log_g: float
    max_identity_residual: float

    @property
    def ok(self):
        return self.min_g > 1.0 and self.max_identity_residual <= IDENTITY_TOL


@functools.lru_cache(maxsize=256)
def validate_g(g: GFunction, grid_level: int = 12) -> GValidation:
    """Check g > 1 and 1/g(t) + 1/g(t + 1/2) = 1 on the dyadic grid of ``grid_level``.

    Raises InvalidGFunction with code NOT_GREATER_THAN_ONE or IDENTITY_VIOLATED.
    """
    if grid_level < 1:
        raise ValueError("grid_level must be >= 1")
    level = grid_level
    if g.kind == "table":
        level = max(level, int(math.log2(len(g.values))))
    theta = np.arange(2 ** level) / 2 ** level
    vals = g(theta)
    residual = float(np.max(np.abs(g.recip(theta) + g.recip(np.mod(theta + 0.5, 1.0)) - 1.0)))
    rep = GValidation(level, float(np.min(vals)), float(np.min(np.log(vals))), residual)
    if not rep.min_g > 1.0:
        raise InvalidGFunction(f"g must exceed 1 everywhere; min over grid is {rep.min_g:.6g}",
                               code="NOT_GREATER_THAN_ONE", report=rep)
    if residual > IDENTITY_TOL:
        raise InvalidGFunction(
            f"identity 1/g(z) + 1/g(-z) = 1 violated: max residual {residual:.3g}",
            code="IDENTITY_VIOLATED", report=rep)
    return rep


# --------------------------------------------------------------------------
# measures
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Probability measure with weight ``weights[j]`` on arc j of level ``level``."""
    level: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=float)
        if self.level < 1 or w.shape != (2 ** self.level,):
            raise InvalidMeasure(f"need 2^level weights (level={self.level}, got {w.shape})")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidMeasure("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise InvalidMeasure(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, level):
        n = 2 ** level
        return cls(level, np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, level, weights):
        w = np.asarray(weights, dtype=float)
        return cls(level, w / w.sum())

    @property
    def size(self):
        return self.weights.size

    def midpoints(self):
        return (np.arange(self.size) + 0.5) / self.size

    def coarsen(self, level):
        if level > self.level:
            raise InvalidMeasure("cannot coarsen to a finer level")
        if level == self.level:
            return self
        w = self.weights.reshape(2 ** level, -1).sum(axis=1)
        return CircleMeasure(level, w / w.sum())

    def cdf_nodes(self):
        """CDF at the arc endpoints 0, 1/n, ..., 1 (uniform density inside arcs)."""
        return np.concatenate(([0.0], np.cumsum(self.weights)))

    def to_json(self):
        return {"level": self.level, "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, doc):
        try:
            return cls(int(doc["level"]), np.asarray(doc["weights"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMeasure(f"malformed measure document: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path):
        try:
            return cls.from_json(json.loads(Path(path).read_text()))
        except (OSError, ValueError) as exc:
            raise InvalidMeasure(f"cannot read measure file {path}: {exc}") from exc


def total_variation(mu: CircleMeasure, nu: CircleMeasure) -> float:
    """TV distance (half the l1 distance), after coarsening to the common level."""
    level = min(mu.level, nu.level)
    return 0.5 * float(np.abs(mu.coarsen(level).weights - nu.coarsen(level).weights).sum())


# --------------------------------------------------------------------------
# transfer operator and g-measures
# --------------------------------------------------------------------------

def _dual_step(w, recip_a, recip_b):
    n = w.size
    j2 = (2 * np.arange(n)) % n
    out = w[j2] * recip_a + w[j2 + 1] * recip_b
    return out / out.sum()


def _quarter_points(n):
    j = np.arange(n)
    return (j + 0.25) / n, (j + 0.75) / n


def transfer_dual_step(mu: CircleMeasure, g: GFunction) -> CircleMeasure:
    """One application of the adjoint of (Lf)(z) = sum_{T w = z} f(w) / g(w).

    Arc I_j is mapped by T onto arcs 2j and 2j+1 (mod n); the inverse branch
    through I_j hits their preimages at the quarter points of I_j, where 1/g
    is evaluated.
    """
    validate_g(g, mu.level + 2)
    a, b = _quarter_points(mu.size)
    w = _dual_step(mu.weights, g.recip(a), g.recip(b))
    return CircleMeasure(mu.level, w)


@dataclass(frozen=True)
class GMeasureResult:
    measure: CircleMeasure
    iterations: int
    residual: float
    history: tuple = ()


def compute_g_measure(g: GFunction, level: int, tol: float = 1e-12,
                      max_iter: int = 10_000) -> GMeasureResult:
    """Power iteration of the dual transfer operator from the uniform measure.

    Stops when the TV distance between successive iterates is <= tol. A
    period-2 pattern (TV over lag 2 below tol, lag 1 above) or running out of
    iterations raises NoConvergence.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    validate_g(g, level + 2)
    a, b = _quarter_points(2 ** level)
    ra, rb = g.recip(a), g.recip(b)
    prev2 = None
    w = np.full(2 ** level, 2.0 ** -level)
    history = []
    for it in range(1, max_iter + 1):
        new = _dual_step(w, ra, rb)
        tv = 0.5 * float(np.abs(new - w).sum())
        history.append(tv)
        if tv <= tol:
            return GMeasureResult(CircleMeasure(level, new), it, tv, tuple(history))
        if prev2 is not None and 0.5 * float(np.abs(new - prev2).sum()) <= tol:
            raise NoConvergence(f"period-2 oscillation after {it} iterations (lag-1 TV {tv:.3g})",
                                iterations=it, residual=tv)
        prev2, w = w, new
    raise NoConvergence(f"no convergence in {max_iter} iterations (last TV {history[-1]:.3g})",
                        iterations=max_iter, residual=history[-1])


def radon_nikodym_check(mu: CircleMeasure, g: GFunction, arc_level: int) -> float:
    """max over dyadic arcs B of level ``arc_level`` of |mu(TB) - int_B g dmu|."""
    if arc_level < 2:
        raise ArcTooCoarse(f"arc_level {arc_level} < 2: T is not injective on arcs longer than 1/4")
    if arc_level > mu.level - 2:
        raise ArcTooCoarse(f"arc_level {arc_level} must be <= measure level - 2 = {mu.level - 2}")
    n_arcs = 2 ** arc_level
    integral = (g(mu.midpoints()) * mu.weights).reshape(n_arcs, -1).sum(axis=1)
    # T(B_i) is the level-(arc_level - 1) arc with index i mod 2^(arc_level-1)
    coarse = mu.weights.reshape(n_arcs // 2, -1).sum(axis=1)
    image = coarse[np.arange(n_arcs) % (n_arcs // 2)]
    return float(np.max(np.abs(image - integral)))

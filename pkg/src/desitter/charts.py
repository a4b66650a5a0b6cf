"""Coordinate charts on the hyperboloid H4+ and the cone C4+.

The forward maps are written with numpy ufuncs only, so they accept plain
arrays as well as :class:`~desitter.jets.Jet` parameters.  The O-type charts
use ``x0 - x4 = e^a``; wherever a basis needs ``b`` it is ``b = e^{-a}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi


class Surface(str, Enum):
    HYPERBOLOID = "hyperboloid"
    CONE = "cone"


class ChartId(str, Enum):
    S = "S"
    H = "H"
    O = "O"  # noqa: E741
    OC = "OC"
    OT = "OT"
    C = "C"
    SH = "SH"


class ChartError(ValueError):
    """Invalid chart parameters or a point a chart cannot represent."""


PARAM_NAMES = {
    ChartId.S: ("a", "beta", "theta", "phi"),
    ChartId.H: ("a", "b", "theta", "phi"),
    ChartId.O: ("a", "r", "theta", "phi"),
    ChartId.OC: ("a", "xi", "z", "phi"),
    ChartId.OT: ("a", "y1", "y2", "y3"),
    ChartId.C: ("a", "b", "theta", "phi"),
    ChartId.SH: ("a", "b", "phi", "Phi"),
}

_INF = math.inf
_ANGLE = (0.0, math.pi)
_CIRCLE = (0.0, TWO_PI)
_LINE = (-_INF, _INF)
_HALF = (0.0, _INF)

RANGES = {
    (ChartId.S, Surface.HYPERBOLOID): (_HALF, _ANGLE, _ANGLE, _CIRCLE),
    (ChartId.H, Surface.HYPERBOLOID): (_LINE, _HALF, _ANGLE, _CIRCLE),
    (ChartId.O, Surface.HYPERBOLOID): (_LINE, _HALF, _ANGLE, _CIRCLE),
    (ChartId.OC, Surface.HYPERBOLOID): (_LINE, _HALF, _LINE, _CIRCLE),
    (ChartId.OT, Surface.HYPERBOLOID): (_LINE, _LINE, _LINE, _LINE),
    (ChartId.C, Surface.HYPERBOLOID): (_HALF, _LINE, _ANGLE, _CIRCLE),
    (ChartId.SH, Surface.HYPERBOLOID): (_HALF, _HALF, _CIRCLE, _CIRCLE),
    (ChartId.S, Surface.CONE): (_LINE, _ANGLE, _ANGLE, _CIRCLE),
    (ChartId.H, Surface.CONE): (_LINE, _HALF, _ANGLE, _CIRCLE),
    (ChartId.O, Surface.CONE): (_LINE, _HALF, _ANGLE, _CIRCLE),
    (ChartId.OC, Surface.CONE): (_LINE, _HALF, _LINE, _CIRCLE),
    (ChartId.OT, Surface.CONE): (_LINE, _LINE, _LINE, _LINE),
    (ChartId.C, Surface.CONE): (_LINE, _LINE, _ANGLE, _CIRCLE),
    (ChartId.SH, Surface.CONE): (_LINE, _HALF, _CIRCLE, _CIRCLE),
}


def as_chart(chart) -> ChartId:
    try:
        return chart if isinstance(chart, ChartId) else ChartId(str(chart))
    except ValueError:
        raise ChartError(f"unknown chart {chart!r}; expected one of S, H, O, OC, OT, C, SH") from None


def as_surface(surface) -> Surface:
    try:
        return surface if isinstance(surface, Surface) else Surface(str(surface).lower())
    except ValueError:
        raise ChartError(f"unknown surface {surface!r}; expected hyperboloid or cone") from None


def bilinear(x, y) -> np.ndarray:
    """Lorentzian form [x, y] = x0 y0 - x1 y1 - x2 y2 - x3 y3 - x4 y4 (first axis)."""
    x = np.asarray(x)
    y = np.asarray(y)
    return x[0] * y[0] - x[1] * y[1] - x[2] * y[2] - x[3] * y[3] - x[4] * y[4]


# ---------------------------------------------------------------------------
# forward maps (arrays or jets)


def _sphere2(theta, phi):
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi), np.cos(theta)


def chart_map(chart, surface, params, eps=None) -> tuple:
    """Homogeneous coordinates (x0, ..., x4) of chart parameters.

    ``params`` is a sequence of four arrays (or jets).  ``eps`` is the sheet
    sign of the cone H-chart and is ignored elsewhere.
    """
    chart, surface = as_chart(chart), as_surface(surface)
    p0, p1, p2, p3 = params
    if surface is Surface.HYPERBOLOID:
        return _hyperboloid_map(chart, p0, p1, p2, p3)
    return _cone_map(chart, p0, p1, p2, p3, 1.0 if eps is None else eps)


def _hyperboloid_map(chart, a, p1, p2, p3):
    if chart is ChartId.S:
        beta, theta, phi = p1, p2, p3
        sa = np.sinh(a)
        n1, n2, n3 = _sphere2(theta, phi)
        sb = np.sin(beta)
        return np.cosh(a), sa * sb * n1, sa * sb * n2, sa * sb * n3, sa * np.cos(beta)
    if chart is ChartId.H:
        b, theta, phi = p1, p2, p3
        ca = np.cosh(a)
        n1, n2, n3 = _sphere2(theta, phi)
        s = ca * np.sinh(b)
        return ca * np.cosh(b), s * n1, s * n2, s * n3, np.sinh(a)
    if chart in (ChartId.O, ChartId.OC, ChartId.OT):
        if chart is ChartId.O:
            r, theta, phi = p1, p2, p3
            n1, n2, n3 = _sphere2(theta, phi)
            y1, y2, y3 = r * n1, r * n2, r * n3
            y_sq = r * r
        elif chart is ChartId.OC:
            xi, z, phi = p1, p2, p3
            y1, y2, y3 = xi * np.cos(phi), xi * np.sin(phi), z
            y_sq = xi * xi + z * z
        else:
            y1, y2, y3 = p1, p2, p3
            y_sq = y1 * y1 + y2 * y2 + y3 * y3
        ea = np.exp(a)
        em = np.exp(-a)
        minus = ea
        plus = em + y_sq * ea
        return (plus + minus) * 0.5, ea * y1, ea * y2, ea * y3, (plus - minus) * 0.5
    if chart is ChartId.C:
        b, theta, phi = p1, p2, p3
        ca, sa = np.cosh(a), np.sinh(a)
        n1, n2, n3 = _sphere2(theta, phi)
        return ca * np.cosh(b), sa * n1, sa * n2, sa * n3, ca * np.sinh(b)
    if chart is ChartId.SH:
        b, phi, big_phi = p1, p2, p3
        ca, sa = np.cosh(a), np.sinh(a)
        s = ca * np.sinh(b)
        return ca * np.cosh(b), s * np.cos(phi), s * np.sin(phi), sa * np.cos(big_phi), sa * np.sin(big_phi)
    raise ChartError(f"unsupported chart {chart}")


def _cone_map(chart, a, p1, p2, p3, eps):
    if chart in (ChartId.O, ChartId.OC, ChartId.OT):
        if chart is ChartId.O:
            r, theta, phi = p1, p2, p3
            n1, n2, n3 = _sphere2(theta, phi)
            y1, y2, y3 = r * n1, r * n2, r * n3
            y_sq = r * r
        elif chart is ChartId.OC:
            xi, z, phi = p1, p2, p3
            y1, y2, y3 = xi * np.cos(phi), xi * np.sin(phi), z
            y_sq = xi * xi + z * z
        else:
            y1, y2, y3 = p1, p2, p3
            y_sq = y1 * y1 + y2 * y2 + y3 * y3
        ea = np.exp(a)
        return ea * (y_sq + 1.0) * 0.5, ea * y1, ea * y2, ea * y3, ea * (y_sq - 1.0) * 0.5
    half = np.exp(a) * 0.5
    if chart is ChartId.S:
        beta, theta, phi = p1, p2, p3
        n1, n2, n3 = _sphere2(theta, phi)
        sb = np.sin(beta)
        return half + 0.0 * sb, half * sb * n1, half * sb * n2, half * sb * n3, half * np.cos(beta)
    if chart is ChartId.H:
        b, theta, phi = p1, p2, p3
        n1, n2, n3 = _sphere2(theta, phi)
        s = half * np.sinh(b)
        return half * np.cosh(b), s * n1, s * n2, s * n3, half * np.asarray(eps, dtype=float) + 0.0 * s
    if chart is ChartId.C:
        b, theta, phi = p1, p2, p3
        n1, n2, n3 = _sphere2(theta, phi)
        return half * np.cosh(b), half * n1, half * n2, half * n3, half * np.sinh(b)
    if chart is ChartId.SH:
        b, phi, big_phi = p1, p2, p3
        s = half * np.sinh(b)
        return half * np.cosh(b), s * np.cos(phi), s * np.sin(phi), half * np.cos(big_phi), half * np.sin(big_phi)
    raise ChartError(f"unsupported chart {chart}")


# ---------------------------------------------------------------------------
# measure densities


def density(chart, surface, params) -> np.ndarray:
    """Density of d^4x/x0 with respect to da dp1 dp2 dp3 (arrays or jets)."""
    chart, surface = as_chart(chart), as_surface(surface)
    a, p1, p2, p3 = params
    if surface is Surface.HYPERBOLOID:
        if chart is ChartId.S:
            return np.sinh(a) ** 3 * np.sin(p1) ** 2 * np.sin(p2)
        if chart is ChartId.H:
            return np.cosh(a) ** 3 * np.sinh(p1) ** 2 * np.sin(p2)
        if chart is ChartId.O:
            return np.exp(3.0 * a) * p1 * p1 * np.sin(p2)
        if chart is ChartId.OC:
            return np.exp(3.0 * a) * p1
        if chart is ChartId.OT:
            return np.exp(3.0 * a) + 0.0 * p1
        if chart is ChartId.C:
            return np.cosh(a) * np.sinh(a) ** 2 * np.sin(p2)
        if chart is ChartId.SH:
            return np.cosh(a) ** 2 * np.sinh(a) * np.sinh(p1)
    else:
        e3 = np.exp(3.0 * a)
        if chart is ChartId.S:
            return e3 / 8.0 * np.sin(p1) ** 2 * np.sin(p2)
        if chart is ChartId.H:
            return e3 / 8.0 * np.sinh(p1) ** 2 * np.sin(p2)
        if chart is ChartId.O:
            return e3 * p1 * p1 * np.sin(p2)
        if chart is ChartId.OC:
            return e3 * p1
        if chart is ChartId.OT:
            return e3 + 0.0 * p1
        if chart is ChartId.C:
            return e3 / 8.0 * np.sin(p2)
        if chart is ChartId.SH:
            return e3 / 8.0 * np.sinh(p1)
    raise ChartError(f"unsupported chart {chart}")


# ---------------------------------------------------------------------------
# inverse maps


def _angles(v1, v2, v3):
    rho = np.hypot(v1, v2)
    theta = np.arctan2(rho, v3)
    phi = np.mod(np.arctan2(v2, v1), TWO_PI)
    return theta, phi


def inverse_map(chart, surface, x, tol: float = 1e-12):
    """Chart parameters of homogeneous points ``x`` (shape (5, ...)).

    Returns ``(params, eps, degenerate)``: params has shape (4, ...), eps is
    the cone H-chart sheet sign (ones elsewhere) and ``degenerate`` flags
    points on a coordinate singularity, where undefined angles are set to 0.
    """
    chart, surface = as_chart(chart), as_surface(surface)
    x = np.asarray(x, dtype=float)
    x0, x1, x2, x3, x4 = x
    eps = np.ones_like(x0)
    if surface is Surface.HYPERBOLOID:
        params, degen = _inverse_hyperboloid(chart, x0, x1, x2, x3, x4, tol)
    else:
        params, eps, degen = _inverse_cone(chart, x0, x1, x2, x3, x4, tol)
    return np.array(params), eps, degen


def _inverse_hyperboloid(chart, x0, x1, x2, x3, x4, tol):
    rad3 = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    if chart is ChartId.S:
        sa = np.sqrt(rad3 * rad3 + x4 * x4)
        a = np.arcsinh(sa)
        scale = np.maximum(sa, tol)
        theta, phi = _angles(x1, x2, x3)
        d_a = sa < tol
        d_beta = rad3 < tol * scale
        d_theta = np.hypot(x1, x2) < tol * scale
        beta = np.where(d_a, 0.0, np.arctan2(rad3, x4))
        theta = np.where(d_a | d_beta, 0.0, theta)
        phi = np.where(d_a | d_beta | d_theta, 0.0, phi)
        return (a, beta, theta, phi), d_a | d_beta | d_theta
    if chart is ChartId.H:
        a = np.arcsinh(x4)
        ca = np.cosh(a)
        b = np.arcsinh(rad3 / ca)
        theta, phi = _angles(x1, x2, x3)
        degen = (rad3 < tol * ca) | (np.hypot(x1, x2) < tol * ca)
        return (a, b, np.where(rad3 < tol * ca, 0.0, theta), np.where(degen, 0.0, phi)), degen
    if chart in (ChartId.O, ChartId.OC, ChartId.OT):
        ea = x0 - x4
        a = np.log(ea)
        y1, y2, y3 = x1 / ea, x2 / ea, x3 / ea
        return _inverse_flat(chart, a, y1, y2, y3, tol)
    if chart is ChartId.C:
        a = np.arcsinh(rad3)
        b = np.arctanh(x4 / x0)
        theta, phi = _angles(x1, x2, x3)
        degen = (rad3 < tol) | (np.hypot(x1, x2) < tol)
        return (a, b, np.where(rad3 < tol, 0.0, theta), np.where(degen, 0.0, phi)), degen
    if chart is ChartId.SH:
        sa = np.hypot(x3, x4)
        a = np.arcsinh(sa)
        ca = np.cosh(a)
        rad2 = np.hypot(x1, x2)
        b = np.arcsinh(rad2 / ca)
        phi = np.mod(np.arctan2(x2, x1), TWO_PI)
        big_phi = np.mod(np.arctan2(x4, x3), TWO_PI)
        d_a, d_b = sa < tol, rad2 < tol * ca
        return (a, b, np.where(d_b, 0.0, phi), np.where(d_a, 0.0, big_phi)), d_a | d_b
    raise ChartError(f"unsupported chart {chart}")


def _inverse_flat(chart, a, y1, y2, y3, tol):
    if chart is ChartId.OT:
        return (a, y1, y2, y3), np.zeros(np.shape(a), dtype=bool)
    if chart is ChartId.O:
        r = np.sqrt(y1 * y1 + y2 * y2 + y3 * y3)
        theta, phi = _angles(y1, y2, y3)
        degen = (r < tol) | (np.hypot(y1, y2) < tol * np.maximum(r, tol))
        return (a, r, np.where(r < tol, 0.0, theta), np.where(degen, 0.0, phi)), degen
    xi = np.hypot(y1, y2)
    phi = np.mod(np.arctan2(y2, y1), TWO_PI)
    degen = xi < tol
    return (a, xi, y3, np.where(degen, 0.0, phi)), degen


def _inverse_cone(chart, x0, x1, x2, x3, x4, tol):
    eps = np.ones_like(x0)
    scale = np.maximum(np.abs(x0), 1e-300)
    if chart in (ChartId.O, ChartId.OC, ChartId.OT):
        ea = x0 - x4
        if np.any(ea <= 0):
            raise ChartError("cone point lies on the generator x0 = x4, outside the orispherical chart")
        params, degen = _inverse_flat(chart, np.log(ea), x1 / ea, x2 / ea, x3 / ea, tol)
        return params, eps, degen
    if chart is ChartId.S:
        a = np.log(2.0 * x0)
        w1, w2, w3, w4 = x1 / x0, x2 / x0, x3 / x0, x4 / x0
        rad3 = np.sqrt(w1 * w1 + w2 * w2 + w3 * w3)
        beta = np.arctan2(rad3, w4)
        theta, phi = _angles(w1, w2, w3)
        degen = (rad3 < tol) | (np.hypot(w1, w2) < tol)
        return (a, beta, np.where(rad3 < tol, 0.0, theta), np.where(degen, 0.0, phi)), eps, degen
    if chart is ChartId.H:
        if np.any(np.abs(x4) < tol * scale):
            raise ChartError("cone point with x4 = 0 is not covered by the H chart")
        eps = np.sign(x4)
        half = np.abs(x4)
        a = np.log(2.0 * half)
        rad3 = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
        b = np.arcsinh(rad3 / half)
        theta, phi = _angles(x1, x2, x3)
        degen = (rad3 < tol * half) | (np.hypot(x1, x2) < tol * half)
        return (a, b, np.where(rad3 < tol * half, 0.0, theta), np.where(degen, 0.0, phi)), eps, degen
    if chart is ChartId.C:
        rad3 = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
        a = np.log(2.0 * rad3)
        b = np.arctanh(x4 / x0)
        theta, phi = _angles(x1, x2, x3)
        degen = np.hypot(x1, x2) < tol * rad3
        return (a, b, theta, np.where(degen, 0.0, phi)), eps, degen
    if chart is ChartId.SH:
        half = np.hypot(x3, x4)
        a = np.log(2.0 * half)
        rad2 = np.hypot(x1, x2)
        b = np.arcsinh(rad2 / half)
        phi = np.mod(np.arctan2(x2, x1), TWO_PI)
        big_phi = np.mod(np.arctan2(x4, x3), TWO_PI)
        degen = rad2 < tol * half
        return (a, b, np.where(degen, 0.0, phi), big_phi), eps, degen
    raise ChartError(f"unsupported chart {chart}")


# ---------------------------------------------------------------------------
# point types


@dataclass(frozen=True)
class HomogeneousPoint:
    """A point (x0, ..., x4) on the hyperboloid or the cone."""

    x: tuple[float, float, float, float, float]
    surface: Surface = Surface.HYPERBOLOID

    def __post_init__(self):
        object.__setattr__(self, "surface", as_surface(self.surface))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if len(self.x) != 5:
            raise ChartError("a homogeneous point has five coordinates")

    def form(self) -> float:
        return float(bilinear(self.x, self.x))

    def check(self, tol: float = 1e-10) -> None:
        q = self.form()
        if self.x[0] <= 0:
            raise ChartError("homogeneous point must have x0 > 0")
        if self.surface is Surface.HYPERBOLOID and abs(q - 1.0) > tol * max(1.0, self.x[0] ** 2):
            raise ChartError(f"point is not on the hyperboloid ([x,x] = {q})")
        if self.surface is Surface.CONE and abs(q) > tol * (1.0 + sum(v * v for v in self.x)):
            raise ChartError(f"point is not on the cone ([x,x] = {q})")

    def to_dict(self) -> dict:
        return {"surface": self.surface.value, "x": list(self.x)}

    @classmethod
    def from_dict(cls, d: dict) -> HomogeneousPoint:
        return cls(tuple(d["x"]), as_surface(d.get("surface", "hyperboloid")))


@dataclass(frozen=True)
class ChartPoint:
    """Chart identifier, surface, four parameters and the optional cone-H sheet sign."""

    chart: ChartId
    surface: Surface
    params: tuple[float, float, float, float]
    eps: int | None = None
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "chart", as_chart(self.chart))
        object.__setattr__(self, "surface", as_surface(self.surface))
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if len(self.params) != 4:
            raise ChartError("a chart point has four parameters")
        if self.chart is ChartId.H and self.surface is Surface.CONE:
            e = 1 if self.eps is None else int(self.eps)
            if e not in (1, -1):
                raise ChartError("eps must be +1 or -1")
            object.__setattr__(self, "eps", e)
        elif self.eps is not None:
            object.__setattr__(self, "eps", None)
        validate_params(self.chart, self.surface, self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.chart]

    def to_dict(self) -> dict:
        d = {"chart": self.chart.value, "surface": self.surface.value, "params": list(self.params)}
        if self.eps is not None:
            d["eps"] = self.eps
        d["x"] = list(to_homogeneous(self).x)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> ChartPoint:
        try:
            return cls(d["chart"], d["surface"], tuple(d["params"]), d.get("eps"))
        except KeyError as exc:
            raise ChartError(f"chart point is missing field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> ChartPoint:
        return cls.from_dict(json.loads(text))


def validate_params(chart, surface, params, slack: float = 1e-12) -> None:
    ranges = RANGES[(as_chart(chart), as_surface(surface))]
    names = PARAM_NAMES[as_chart(chart)]
    for value, (lo, hi), name in zip(params, ranges, names):
        if not math.isfinite(value):
            raise ChartError(f"parameter {name} is not finite")
        if value < lo - slack or value > hi + slack:
            raise ChartError(f"parameter {name}={value} outside [{lo}, {hi}]")


def to_homogeneous(cp: ChartPoint) -> HomogeneousPoint:
    """Homogeneous coordinates of a validated chart point."""
    x = chart_map(cp.chart, cp.surface, cp.params, cp.eps)
    return HomogeneousPoint(tuple(float(v) for v in x), cp.surface)


def from_homogeneous(x: HomogeneousPoint, chart) -> ChartPoint:
    """Chart parameters of a point; singular loci get canonical angles and a flag."""
    chart = as_chart(chart)
    x.check()
    params, eps, degen = inverse_map(chart, x.surface, np.array(x.x))
    e = int(eps) if (chart is ChartId.H and x.surface is Surface.CONE) else None
    return ChartPoint(chart, x.surface, tuple(float(v) for v in params), e, bool(degen))


def measure_density(cp: ChartPoint) -> float:
    """Density of the invariant measure d^4x/x0 at ``cp``; 0 on degenerate loci."""
    return float(density(cp.chart, cp.surface, cp.params))


def is_degenerate(cp: ChartPoint, tol: float = 1e-12) -> bool:
    return measure_density(cp) <= tol


def sample_params(chart, surface, n: int, rng: np.random.Generator, spread: float = 2.0) -> np.ndarray:
    """Random nondegenerate parameters, shape (4, n), drawn well inside the chart ranges."""
    chart, surface = as_chart(chart), as_surface(surface)
    ranges = RANGES[(chart, surface)]
    out = np.empty((4, n))
    margin = 0.05
    for k, (lo, hi) in enumerate(ranges):
        if (lo, hi) == _ANGLE:
            out[k] = rng.uniform(margin, math.pi - margin, n)
        elif (lo, hi) == _CIRCLE:
            out[k] = rng.uniform(0.0, TWO_PI, n)
        elif (lo, hi) == _HALF:
            out[k] = rng.uniform(margin, spread, n)
        else:
            out[k] = rng.uniform(-spread, spread, n)
    return out

"""Lie-algebra generators of SO0(1,4) as first-order operators in chart coordinates.

Each generator is ``-i * sum_k c_k(p) d/dp_k``.  The coefficient functions
come either from hand-transcribed tables (all hyperboloid charts and the
cone H chart) or from pushing the homogeneous vector fields

    J_rs = -i (x_r d_s - x_s d_r),    J_0s = -i (x_0 d_s + x_s d_0)

through the chart map with jets.  Operators act on :class:`ScalarField`
objects; composition is carried out on truncated Taylor jets, so products
of up to four generators are exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .charts import ChartError, ChartId, ChartPoint, Surface, as_chart, as_surface, chart_map
from .jets import MAX_ORDER, Jet

SINGULAR_TOL = 1e-8

BASIC = ("M1", "M2", "M3", "P1", "P2", "P3", "N1", "N2", "N3", "P0")


class GeneratorId(str, Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    N1 = "N1"
    N2 = "N2"
    N3 = "N3"
    P0 = "P0"
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    Ecal1 = "Ecal1"
    Ecal2 = "Ecal2"
    Ecal3 = "Ecal3"


class GeneratorError(ValueError):
    pass


class DegeneratePointError(GeneratorError):
    """Point too close to a coordinate singularity for the operator coefficients."""


class JetOrderError(GeneratorError):
    pass


# homogeneous realization: generator -> (kind, r, s)
_HOMOGENEOUS = {
    "M1": (2, 3),
    "M2": (3, 1),
    "M3": (1, 2),
    "P1": (1, 4),
    "P2": (2, 4),
    "P3": (3, 4),
    "N1": (0, 1),
    "N2": (0, 2),
    "N3": (0, 3),
    "P0": (0, 4),
}


def homogeneous_field(name: str, x) -> list:
    """Components (v0..v4) of the vector field with J = -i v.d in homogeneous coordinates."""
    r, s = _HOMOGENEOUS[name]
    v = [0.0] * 5
    if r == 0:
        v[s] = x[0]
        v[0] = x[s]
    else:
        v[s] = x[r]
        v[r] = -x[s]
    return v


def generator_matrix(name: str) -> np.ndarray:
    """5x5 real matrix A with v = A x for the homogeneous vector field of ``name``."""
    r, s = _HOMOGENEOUS[name]
    a = np.zeros((5, 5))
    if r == 0:
        a[s, 0] = 1.0
        a[0, s] = 1.0
    else:
        a[s, r] = 1.0
        a[r, s] = -1.0
    return a


# ---------------------------------------------------------------------------
# printed coefficient tables


def _sphere_m(theta, phi, z):
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    cot = ct / st
    return {
        "M1": [z, z, -sp, -cot * cp],
        "M2": [z, z, cp, -cot * sp],
        "M3": [z, z, z, 1.0],
    }, (st, ct, sp, cp)


def _table_s(p, eps):
    a, beta, theta, phi = p
    t, (st, ct, sp, cp) = _sphere_m(theta, phi, 0.0)
    sb, cb = np.sin(beta), np.cos(beta)
    cotb = cb / sb
    cotha = np.cosh(a) / np.sinh(a)
    t["P0"] = [cb, -cotha * sb, 0.0, 0.0]
    t["P1"] = [0.0, -st * cp, -cotb * ct * cp, cotb * sp / st]
    t["P2"] = [0.0, -st * sp, -cotb * ct * sp, -cotb * cp / st]
    t["P3"] = [0.0, -ct, cotb * st, 0.0]
    t["N1"] = [sb * st * cp, cotha * cb * st * cp, cotha * ct * cp / sb, -cotha * sp / (sb * st)]
    t["N2"] = [sb * st * sp, cotha * cb * st * sp, cotha * ct * sp / sb, cotha * cp / (sb * st)]
    t["N3"] = [sb * ct, cotha * cb * ct, -cotha * st / sb, 0.0]
    return t


def _table_h(p, eps, cone=False):
    a, b, theta, phi = p
    t, (st, ct, sp, cp) = _sphere_m(theta, phi, 0.0)
    shb, chb = np.sinh(b), np.cosh(b)
    cothb = chb / shb
    if cone:
        tha = 1.0
        e = np.asarray(eps, dtype=float)
    else:
        tha = np.tanh(a)
        e = 1.0
    t["P0"] = [e * chb, -e * tha * shb, 0.0, 0.0]
    t["P1"] = [e * shb * st * cp, -e * tha * chb * st * cp, -e * tha * ct * cp / shb, e * tha * sp / (shb * st)]
    t["P2"] = [e * shb * st * sp, -e * tha * chb * st * sp, -e * tha * ct * sp / shb, -e * tha * cp / (shb * st)]
    t["P3"] = [e * shb * ct, -e * tha * chb * ct, e * tha * st / shb, 0.0]
    t["N1"] = [0.0, st * cp, cothb * ct * cp, -cothb * sp / st]
    t["N2"] = [0.0, st * sp, cothb * ct * sp, cothb * cp / st]
    t["N3"] = [0.0, ct, -cothb * st, 0.0]
    return t


def _table_o(p, eps):
    a, r, theta, phi = p
    t, (st, ct, sp, cp) = _sphere_m(theta, phi, 0.0)
    em, ea = np.exp(-a), np.exp(a)
    r2 = r * r
    big_a = em / 2.0 * (-em + (r2 + 1.0) * ea)
    big_b = em / (2.0 * r) * (em + (r2 - 1.0) * ea)
    big_c = em / 2.0 * (-em + (r2 - 1.0) * ea)
    big_d = em / (2.0 * r) * (em + (r2 + 1.0) * ea)
    t["P0"] = [-1.0, r, 0.0, 0.0]
    t["P1"] = [-r * st * cp, big_a * st * cp, -big_b * ct * cp, big_b * sp / st]
    t["P2"] = [-r * st * sp, big_a * st * sp, -big_b * ct * sp, -big_b * cp / st]
    t["P3"] = [-r * ct, big_a * ct, big_b * st, 0.0]
    t["N1"] = [r * st * cp, -big_c * st * cp, big_d * ct * cp, -big_d * sp / st]
    t["N2"] = [r * st * sp, -big_c * st * sp, big_d * ct * sp, big_d * cp / st]
    t["N3"] = [r * ct, -big_c * ct, -big_d * st, 0.0]
    t["E1"] = [0.0, st * cp, ct * cp / r, -sp / (r * st)]
    t["E2"] = [0.0, st * sp, ct * sp / r, cp / (r * st)]
    t["E3"] = [0.0, ct, -st / r, 0.0]
    return t


def _table_oc(p, eps):
    a, xi, z, phi = p
    sp, cp = np.sin(phi), np.cos(phi)
    em, ea = np.exp(-a), np.exp(a)
    xi2, z2 = xi * xi, z * z
    t = {
        "M1": [0.0, -z * sp, xi * sp, -z * cp / xi],
        "M2": [0.0, z * cp, -xi * cp, -z * sp / xi],
        "M3": [0.0, 0.0, 0.0, 1.0],
        "P0": [-1.0, xi, z, 0.0],
    }
    p_xi = em / 2.0 * (-em + (xi2 - z2 + 1.0) * ea)
    p_phi = em / (2.0 * xi) * (em + (xi2 + z2 - 1.0) * ea)
    n_xi = em / 2.0 * (em + (z2 - xi2 + 1.0) * ea)
    n_phi = em / (2.0 * xi) * (em + (xi2 + z2 + 1.0) * ea)
    t["P1"] = [-xi * cp, p_xi * cp, xi * z * cp, p_phi * sp]
    t["P2"] = [-xi * sp, p_xi * sp, xi * z * sp, -p_phi * cp]
    t["P3"] = [-z, z * xi, em / 2.0 * (-em + (z2 - xi2 + 1.0) * ea), 0.0]
    t["N1"] = [xi * cp, n_xi * cp, -z * xi * cp, -n_phi * sp]
    t["N2"] = [xi * sp, n_xi * sp, -z * xi * sp, n_phi * cp]
    t["N3"] = [z, -z * xi, em / 2.0 * (em + (xi2 - z2 + 1.0) * ea), 0.0]
    t["E1"] = [0.0, cp, 0.0, -sp / xi]
    t["E2"] = [0.0, sp, 0.0, cp / xi]
    t["E3"] = [0.0, 0.0, 1.0, 0.0]
    return t


def _table_ot(p, eps):
    a, y1, y2, y3 = p
    y = (y1, y2, y3)
    em, ea = np.exp(-a), np.exp(a)
    ysq = y1 * y1 + y2 * y2 + y3 * y3
    t = {
        "M1": [0.0, 0.0, -y3, y2],
        "M2": [0.0, y3, 0.0, -y1],
        "M3": [0.0, -y2, y1, 0.0],
        "P0": [-1.0, y1, y2, y3],
    }
    p_diag = -em / 2.0 * (em + (ysq - 1.0) * ea)
    n_diag = em / 2.0 * (em + (ysq + 1.0) * ea)
    for k in range(3):
        pk = [-y[k]] + [y[k] * y[j] for j in range(3)]
        nk = [y[k]] + [-y[k] * y[j] for j in range(3)]
        pk[k + 1] = pk[k + 1] + p_diag
        nk[k + 1] = nk[k + 1] + n_diag
        t[f"P{k + 1}"] = pk
        t[f"N{k + 1}"] = nk
        e = [0.0, 0.0, 0.0, 0.0]
        e[k + 1] = 1.0
        t[f"E{k + 1}"] = e
    return t


def _table_c(p, eps):
    a, b, theta, phi = p
    t, (st, ct, sp, cp) = _sphere_m(theta, phi, 0.0)
    shb, chb = np.sinh(b), np.cosh(b)
    tha = np.tanh(a)
    cotha = 1.0 / tha
    t["P0"] = [0.0, 1.0, 0.0, 0.0]
    t["P1"] = [-shb * st * cp, tha * chb * st * cp, -cotha * shb * ct * cp, cotha * shb * sp / st]
    t["P2"] = [-shb * st * sp, tha * chb * st * sp, -cotha * shb * ct * sp, -cotha * shb * cp / st]
    t["P3"] = [-shb * ct, tha * chb * ct, cotha * shb * st, 0.0]
    t["N1"] = [chb * st * cp, -tha * shb * st * cp, cotha * chb * ct * cp, -cotha * chb * sp / st]
    t["N2"] = [chb * st * sp, -tha * shb * st * sp, cotha * chb * ct * sp, cotha * chb * cp / st]
    t["N3"] = [chb * ct, -tha * shb * ct, -cotha * chb * st, 0.0]
    return t


def _table_sh(p, eps):
    a, b, phi, big_phi = p
    shb, chb = np.sinh(b), np.cosh(b)
    tha = np.tanh(a)
    cotha = 1.0 / tha
    cothb = chb / shb
    sp, cp = np.sin(phi), np.cos(phi)
    sq, cq = np.sin(big_phi), np.cos(big_phi)
    return {
        "M1": [shb * sp * cq, -tha * chb * sp * cq, -tha * cp * cq / shb, -cotha * shb * sp * sq],
        "M2": [-shb * cp * cq, tha * chb * cp * cq, -tha * sp * cq / shb, cotha * shb * cp * sq],
        "M3": [0.0, 0.0, 1.0, 0.0],
        "P3": [0.0, 0.0, 0.0, 1.0],
        "P1": [shb * cp * sq, -tha * chb * cp * sq, tha * sp * sq / shb, cotha * shb * cp * cq],
        "P2": [shb * sp * sq, -tha * chb * sp * sq, -tha * cp * sq / shb, cotha * shb * sp * cq],
        "N1": [0.0, cp, -cothb * sp, 0.0],
        "N2": [0.0, sp, cothb * cp, 0.0],
        "N3": [chb * cq, -tha * shb * cq, 0.0, -cotha * chb * sq],
        "P0": [chb * sq, -tha * shb * sq, 0.0, cotha * chb * cq],
    }


_PRINTED = {
    (ChartId.S, Surface.HYPERBOLOID): _table_s,
    (ChartId.H, Surface.HYPERBOLOID): _table_h,
    (ChartId.O, Surface.HYPERBOLOID): _table_o,
    (ChartId.OC, Surface.HYPERBOLOID): _table_oc,
    (ChartId.OT, Surface.HYPERBOLOID): _table_ot,
    (ChartId.C, Surface.HYPERBOLOID): _table_c,
    (ChartId.SH, Surface.HYPERBOLOID): _table_sh,
    (ChartId.H, Surface.CONE): lambda p, eps: _table_h(p, eps, cone=True),
}


def has_printed_table(chart, surface) -> bool:
    return (as_chart(chart), as_surface(surface)) in _PRINTED


# ---------------------------------------------------------------------------
# pushforward of the homogeneous fields


def _det3(m, r, c):
    (r0, r1, r2), (c0, c1, c2) = r, c
    return (
        m[r0][c0] * (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1])
        - m[r0][c1] * (m[r1][c0] * m[r2][c2] - m[r1][c2] * m[r2][c0])
        + m[r0][c2] * (m[r1][c0] * m[r2][c1] - m[r1][c1] * m[r2][c0])
    )


def _inverse4(m):
    """Inverse of a 4x4 matrix given as nested lists of arrays or jets (adjugate formula)."""
    idx = range(4)
    cof = [[None] * 4 for _ in idx]
    for i in idx:
        for j in idx:
            rows = tuple(k for k in idx if k != i)
            cols = tuple(k for k in idx if k != j)
            sign = -1.0 if (i + j) % 2 else 1.0
            cof[i][j] = _det3(m, rows, cols) * sign
    det = m[0][0] * cof[0][0] + m[0][1] * cof[0][1] + m[0][2] * cof[0][2] + m[0][3] * cof[0][3]
    rdet = 1.0 / det
    return [[cof[j][i] * rdet for j in idx] for i in idx]


def pushforward_table(chart, surface, point, eps, order: int) -> dict:
    """Coefficient jets (order ``order``) of the ten generators, by pushforward.

    The spatial block d(x1..x4)/dp is invertible wherever the invariant
    density is nonzero, so c = (dx/dp)^{-1} v restricted to x1..x4.
    """
    chart, surface = as_chart(chart), as_surface(surface)
    pj = Jet.variables(point, order + 1)
    x = chart_map(chart, surface, pj, eps)
    x = [xi if isinstance(xi, Jet) else Jet.constant(np.broadcast_to(xi, np.shape(point)[1:]), order + 1) for xi in x]
    jac = [[x[i + 1].diff(k) for k in range(4)] for i in range(4)]
    inv = _inverse4(jac)
    xt = [xi.truncate(order) for xi in x]
    out = {}
    for name in BASIC:
        v = homogeneous_field(name, xt)
        coeffs = []
        for k in range(4):
            acc = None
            for i in range(4):
                if isinstance(v[i + 1], float) and v[i + 1] == 0.0:
                    continue
                term = inv[k][i] * v[i + 1]
                acc = term if acc is None else acc + term
            coeffs.append(acc if acc is not None else 0.0)
        out[name] = coeffs
    return out


def _add_derived(t: dict) -> dict:
    for k in (1, 2, 3):
        if f"E{k}" not in t:
            t[f"E{k}"] = [_lin(1.0, p, 1.0, n) for p, n in zip(t[f"P{k}"], t[f"N{k}"])]
    t["Ecal1"] = t["E1"]
    t["Ecal2"] = t["E2"]
    t["Ecal3"] = [_lin(1.0, e, 1.0, m) for e, m in zip(t["E3"], t["M3"])]
    return t


def _lin(wa, a, wb, b):
    za = isinstance(a, float) and a == 0.0
    zb = isinstance(b, float) and b == 0.0
    if za and zb:
        return 0.0
    if za:
        return b * wb
    if zb:
        return a * wa
    return a * wa + b * wb


# ---------------------------------------------------------------------------
# operators and fields


@dataclass(frozen=True)
class DiffOperator:
    """Linear combination sum_g w_g G of generators, each G = -i sum_k c_k d_k."""

    chart: ChartId
    surface: Surface
    terms: tuple[tuple[str, complex], ...]
    source: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "chart", as_chart(self.chart))
        object.__setattr__(self, "surface", as_surface(self.surface))
        if self.source not in ("auto", "table", "pushforward"):
            raise GeneratorError(f"unknown coefficient source {self.source!r}")
        if self.source == "table" and not has_printed_table(self.chart, self.surface):
            raise GeneratorError(f"no printed generator table for {self.chart.value} on the {self.surface.value}")

    def _compatible(self, other: DiffOperator) -> None:
        if (self.chart, self.surface, self.source) != (other.chart, other.surface, other.source):
            raise GeneratorError("operators from different charts or sources cannot be combined")

    def __add__(self, other: DiffOperator) -> DiffOperator:
        self._compatible(other)
        return DiffOperator(self.chart, self.surface, _merge(self.terms + other.terms), self.source)

    def __sub__(self, other: DiffOperator) -> DiffOperator:
        return self + other * (-1.0)

    def __mul__(self, w) -> DiffOperator:
        return DiffOperator(self.chart, self.surface, tuple((g, c * w) for g, c in self.terms), self.source)

    __rmul__ = __mul__

    def coeffs(self, p, eps=None) -> np.ndarray:
        """Coefficients c_k (shape (4, ...)) of ``-i sum_k c_k d_k`` at points ``p``."""
        point, eps = _as_points(p, eps, self.chart, self.surface)
        ctx = _Context(self.chart, self.surface, point, eps, self.source)
        c = ctx.coefficients(self, 0)
        return np.array([np.broadcast_to(_value(ck), point.shape[1:]) for ck in c])


def _merge(terms):
    acc: dict[str, complex] = {}
    for g, c in terms:
        acc[g] = acc.get(g, 0.0) + c
    return tuple((g, c) for g, c in acc.items() if c != 0)


def _value(x):
    return x.value if isinstance(x, Jet) else np.asarray(x)


def generator_op(chart, surface, g, source: str = "auto") -> DiffOperator:
    """Operator for generator ``g`` in the given chart."""
    name = GeneratorId(g.value if isinstance(g, GeneratorId) else str(g)).value
    return DiffOperator(chart, surface, ((name, 1.0),), source)


@dataclass
class ScalarField:
    """A field written with numpy ufuncs in the chart parameters, so it accepts jets.

    ``fn(params, eps)`` receives four arrays or jets (and the cone H sheet
    sign) and returns the field values.
    """

    fn: Callable
    chart: ChartId | None = None
    surface: Surface | None = None
    name: str = field(default="field")

    def __call__(self, params, eps=None):
        return self.fn(params, eps)

    def jet(self, point, order: int, eps=None) -> Jet:
        if not 0 <= order <= MAX_ORDER:
            raise JetOrderError(f"jet order must lie in [0, {MAX_ORDER}]")
        point = np.asarray(point, dtype=float)
        val = self.fn(Jet.variables(point, order), eps)
        if not isinstance(val, Jet):
            val = Jet.constant(np.broadcast_to(val, point.shape[1:]), order)
        return val

    @classmethod
    def from_homogeneous(cls, g: Callable, chart, surface, name: str = "pullback") -> ScalarField:
        """Pull back a function g(x0, ..., x4) written with numpy ufuncs."""
        chart, surface = as_chart(chart), as_surface(surface)

        def fn(params, eps=None):
            return g(*chart_map(chart, surface, params, eps))

        return cls(fn, chart, surface, name)


def _as_points(p, eps, chart, surface):
    if isinstance(p, ChartPoint):
        if p.chart is not chart or p.surface is not surface:
            raise GeneratorError("chart point does not belong to the operator's chart")
        point = np.array(p.params, dtype=float).reshape(4, 1)
        e = None if p.eps is None else np.array([float(p.eps)])
        return point, e
    point = np.asarray(p, dtype=float)
    if point.ndim == 0 or point.shape[0] != 4:
        raise GeneratorError("points must have shape (4, ...)")
    if point.ndim == 1:
        point = point.reshape(4, 1)
    if eps is not None:
        eps = np.broadcast_to(np.asarray(eps, dtype=float), point.shape[1:])
    return point, eps


def singular_distance(chart, surface, point) -> np.ndarray:
    """Smallest vanishing factor of the chart's invariant density at ``point``."""
    chart, surface = as_chart(chart), as_surface(surface)
    a, p1, p2, p3 = np.asarray(point, dtype=float)
    hyp = surface is Surface.HYPERBOLOID
    big = np.full(np.shape(a), np.inf)
    factors = {
        ChartId.S: [np.abs(np.sinh(a)) if hyp else big, np.abs(np.sin(p1)), np.abs(np.sin(p2))],
        ChartId.H: [np.abs(np.sinh(p1)), np.abs(np.sin(p2))],
        ChartId.O: [np.abs(p1), np.abs(np.sin(p2))],
        ChartId.OC: [np.abs(p1)],
        ChartId.OT: [big],
        ChartId.C: [np.abs(np.sinh(a)) if hyp else big, np.abs(np.sin(p2))],
        ChartId.SH: [np.abs(np.sinh(a)) if hyp else big, np.abs(np.sinh(p1))],
    }[chart]
    return np.minimum.reduce([np.broadcast_to(f, np.shape(a)) for f in factors])


class _Context:
    """Coefficient jets for one chart and batch of points, cached per jet order."""

    def __init__(self, chart, surface, point, eps, source="auto"):
        self.chart, self.surface = as_chart(chart), as_surface(surface)
        self.point = point
        self.eps = eps
        if self.chart is ChartId.H and self.surface is Surface.CONE and eps is None:
            self.eps = np.ones(point.shape[1:])
        if source == "auto":
            source = "table" if has_printed_table(self.chart, self.surface) else "pushforward"
        self.source = source
        self._cache: dict[int, dict] = {}
        if np.any(singular_distance(self.chart, self.surface, point) < SINGULAR_TOL):
            raise DegeneratePointError("point lies within 1e-8 of a coordinate singularity")

    def table(self, order: int) -> dict:
        if order not in self._cache:
            if self.source == "table":
                vars_ = Jet.variables(self.point, order)
                t = dict(_PRINTED[(self.chart, self.surface)](vars_, self.eps))
            else:
                t = pushforward_table(self.chart, self.surface, self.point, self.eps, order)
            self._cache[order] = _add_derived(t)
        return self._cache[order]

    def coefficients(self, op: DiffOperator, order: int) -> list:
        t = self.table(order)
        out = [0.0] * 4
        for g, w in op.terms:
            for k in range(4):
                out[k] = _lin(1.0, out[k], w, t[g][k])
        return out

    def apply(self, op: DiffOperator, f: Jet) -> Jet:
        if f.order < 1:
            raise JetOrderError("applying a first-order operator needs a jet of order >= 1")
        c = self.coefficients(op, f.order - 1)
        acc = None
        for k in range(4):
            if isinstance(c[k], float) and c[k] == 0.0:
                continue
            term = f.diff(k) * c[k]
            acc = term if acc is None else acc + term
        if acc is None:
            return Jet.constant(np.zeros(f.batch_shape, dtype=complex), f.order - 1)
        return acc * (-1j)

    def gen(self, name: str) -> DiffOperator:
        return DiffOperator(self.chart, self.surface, ((name, 1.0),), self.source)


def _prepare(f: ScalarField, p, eps, chart, surface, order, source="auto"):
    chart, surface = as_chart(chart), as_surface(surface)
    point, eps = _as_points(p, eps, chart, surface)
    ctx = _Context(chart, surface, point, eps, source)
    return ctx, f.jet(point, order, ctx.eps)


def _scalar(v):
    v = np.asarray(v)
    return complex(v.ravel()[0]) if v.size == 1 else v


def apply(op: DiffOperator, f: ScalarField, p, eps=None):
    """Value of ``op f`` at the chart point(s) ``p``."""
    ctx, fj = _prepare(f, p, eps, op.chart, op.surface, 1, op.source)
    return _scalar(ctx.apply(op, fj).value)


def compose_apply(ops: list[DiffOperator], f: ScalarField, p, eps=None, order: int | None = None):
    """Value of ``ops[0] ops[1] ... ops[-1] f`` (the last operator acts first)."""
    if not ops:
        raise GeneratorError("empty operator list")
    n = len(ops) if order is None else order
    if n < len(ops):
        raise JetOrderError(f"a product of {len(ops)} operators needs a jet of order {len(ops)}")
    if n > MAX_ORDER:
        raise JetOrderError(f"at most {MAX_ORDER} operators can be composed")
    first = ops[0]
    ctx, fj = _prepare(f, p, eps, first.chart, first.surface, n, first.source)
    for op in reversed(ops):
        fj = ctx.apply(op, fj)
    return _scalar(fj.value)


# ---------------------------------------------------------------------------
# Casimir operators


def _casimir_f_jet(ctx: _Context, fj: Jet) -> Jet:
    acc = None
    for name, sign in (("P0", 1.0), ("N1", 1.0), ("N2", 1.0), ("N3", 1.0), ("P1", -1.0), ("P2", -1.0), ("P3", -1.0), ("M1", -1.0), ("M2", -1.0), ("M3", -1.0)):
        g = ctx.gen(name)
        term = ctx.apply(g, ctx.apply(g, fj)) * sign
        acc = term if acc is None else acc + term
    return acc


def casimir_F(f: ScalarField, p, chart, surface, eps=None, source: str = "auto"):
    """F f = (P0^2 + N^2 - P^2 - M^2) f by composing generator operators."""
    ctx, fj = _prepare(f, p, eps, chart, surface, 2, source)
    return _scalar(_casimir_f_jet(ctx, fj).value)


def _sum(jets):
    acc = None
    for j in jets:
        acc = j if acc is None else acc + j
    return acc


def _casimir_w_jet(ctx: _Context, fj: Jet) -> Jet:
    g = {n: ctx.gen(n) for n in BASIC}
    ap = ctx.apply

    def dot(a: str, b: str, h: Jet) -> Jet:
        return _sum(ap(g[f"{a}{k}"], ap(g[f"{b}{k}"], h)) for k in (1, 2, 3))

    def v_op(k: int, h: Jet) -> Jet:
        l, m = k % 3 + 1, (k + 1) % 3 + 1
        return ap(g["P0"], ap(g[f"M{k}"], h)) - (ap(g[f"P{l}"], ap(g[f"N{m}"], h)) - ap(g[f"P{m}"], ap(g[f"N{l}"], h)))

    mp2 = dot("M", "P", dot("M", "P", fj))
    vv = _sum(v_op(k, v_op(k, fj)) for k in (1, 2, 3))
    mn2 = dot("M", "N", dot("M", "N", fj))
    return mp2 - vv - mn2


def casimir_W(f: ScalarField, p, chart, surface, eps=None, source: str = "auto"):
    """W f = ((M.P)^2 - (P0 M - P x N)^2 - (M.N)^2) f with products in the written order."""
    ctx, fj = _prepare(f, p, eps, chart, surface, 4, source)
    return _scalar(_casimir_w_jet(ctx, fj).value)


def casimir_scale(f: ScalarField, p, chart, surface, eps=None, order: int = 4) -> np.ndarray:
    """Magnitude of the field's jet up to ``order``; used to scale residuals."""
    point, eps = _as_points(p, eps, as_chart(chart), as_surface(surface))
    fj = f.jet(point, order, eps)
    return np.sqrt(np.sum(np.abs(fj.c) ** 2, axis=0))


# ---------------------------------------------------------------------------
# printed second-order operators


class _Derivs:
    """Value, gradient and Hessian of a field at a batch of points."""

    def __init__(self, fj: Jet):
        self.f = fj.value
        self.d = [fj.grad(k) for k in range(4)]
        self.dd = [[fj.second(i, j) for j in range(4)] for i in range(4)]


def _sphere2_laplacian(dv: _Derivs, theta, it: int, ip: int):
    """Angular Laplacian on S^2: theta-index ``it``, phi-index ``ip``."""
    st, ct = np.sin(theta), np.cos(theta)
    return dv.dd[it][it] + ct / st * dv.d[it] + dv.dd[ip][ip] / (st * st)


def _radial(dv: _Derivs, i: int, weight_log_deriv):
    """(1/w) d_i (w d_i) = d_ii + (w'/w) d_i."""
    return dv.dd[i][i] + weight_log_deriv * dv.d[i]


def _laplacian_values(chart, surface, point, dv: _Derivs):
    a, p1, p2, p3 = point
    if surface is Surface.CONE:
        return dv.dd[0][0] + 3.0 * dv.d[0]
    if chart is ChartId.S:
        beta, theta = p1, p2
        ang = _radial(dv, 1, 2.0 * np.cos(beta) / np.sin(beta)) + _sphere2_laplacian(dv, theta, 2, 3) / np.sin(beta) ** 2
        return _radial(dv, 0, 3.0 * np.cosh(a) / np.sinh(a)) + ang / np.sinh(a) ** 2
    if chart is ChartId.H:
        b, theta = p1, p2
        inner = _radial(dv, 1, 2.0 * np.cosh(b) / np.sinh(b)) + _sphere2_laplacian(dv, theta, 2, 3) / np.sinh(b) ** 2
        return _radial(dv, 0, 3.0 * np.tanh(a)) + inner / np.cosh(a) ** 2
    if chart in (ChartId.O, ChartId.OC, ChartId.OT):
        bsq = np.exp(-2.0 * a)
        return dv.dd[0][0] + 3.0 * dv.d[0] + bsq * _flat_laplacian(chart, point, dv, 3)
    if chart is ChartId.C:
        theta = p2
        rad = _radial(dv, 0, np.tanh(a) + 2.0 * np.cosh(a) / np.sinh(a))
        return rad + dv.dd[1][1] / np.cosh(a) ** 2 + _sphere2_laplacian(dv, theta, 2, 3) / np.sinh(a) ** 2
    if chart is ChartId.SH:
        b = p1
        rad = _radial(dv, 0, 2.0 * np.tanh(a) + np.cosh(a) / np.sinh(a))
        return rad + dv.dd[3][3] / np.sinh(a) ** 2 + _hyperbolic_plane(dv, b) / np.cosh(a) ** 2
    raise ChartError(f"unsupported chart {chart}")


def _hyperbolic_plane(dv: _Derivs, b):
    return dv.dd[1][1] + np.cosh(b) / np.sinh(b) * dv.d[1] + dv.dd[2][2] / np.sinh(b) ** 2


def _flat_laplacian(chart, point, dv: _Derivs, dims: int):
    """Euclidean Laplacian in the y-variables of the O-type charts (dims 2 drops z for OC)."""
    a, p1, p2, p3 = point
    if chart is ChartId.O:
        r, theta = p1, p2
        return dv.dd[1][1] + 2.0 / r * dv.d[1] + _sphere2_laplacian(dv, theta, 2, 3) / (r * r)
    if chart is ChartId.OC:
        xi = p1
        planar = dv.dd[1][1] + dv.d[1] / xi + dv.dd[3][3] / (xi * xi)
        return planar + (dv.dd[2][2] if dims == 3 else 0.0)
    if chart is ChartId.OT:
        return dv.dd[1][1] + dv.dd[2][2] + dv.dd[3][3]
    raise GeneratorError(f"no flat Laplacian in chart {chart.value}")


def laplacian(chart, surface, f: ScalarField, p, eps=None):
    """Chart form of the invariant Laplacian, equal to -F.

    On the cone this is d_a^2 + 3 d_a in every chart.
    """
    chart, surface = as_chart(chart), as_surface(surface)
    point, eps = _as_points(p, eps, chart, surface)
    if surface is Surface.HYPERBOLOID and np.any(singular_distance(chart, surface, point) < SINGULAR_TOL):
        raise DegeneratePointError("point lies within 1e-8 of a coordinate singularity")
    dv = _Derivs(f.jet(point, 2, eps))
    return _scalar(_laplacian_values(chart, surface, point, dv))


INVARIANTS = {
    ChartId.S: ("J2", "M2", "M3"),
    ChartId.H: ("NM2", "M2", "M3"),
    ChartId.O: ("E2", "M2", "M3"),
    ChartId.OC: ("E2", "Etilde2", "E3", "M3"),
    ChartId.OT: ("E2", "Ey1", "Ey2", "Ey3"),
    ChartId.C: ("M2", "M3", "P0"),
    ChartId.SH: ("H2", "M3", "P3"),
}


def subgroup_invariants(chart) -> tuple[str, ...]:
    return INVARIANTS[as_chart(chart)]


def subgroup_invariant(chart, name: str, f: ScalarField, p, surface=Surface.HYPERBOLOID, eps=None):
    """Apply the chart's printed subgroup invariant ``name`` to ``f`` at ``p``.

    Names: M2, NM2, J2, E2, Etilde2, E3, M3, P0, P3, H2 and, in the OT chart,
    Ey1, Ey2, Ey3 for the individual translations.
    """
    chart, surface = as_chart(chart), as_surface(surface)
    if name not in subgroup_invariants(chart):
        raise GeneratorError(f"invariant {name!r} is not available in chart {chart.value}")
    point, eps = _as_points(p, eps, chart, surface)
    if np.any(singular_distance(chart, surface, point) < SINGULAR_TOL):
        raise DegeneratePointError("point lies within 1e-8 of a coordinate singularity")
    fj = f.jet(point, 2, eps)
    dv = _Derivs(fj)
    a, p1, p2, p3 = point
    if name == "M3":
        idx = 2 if chart is ChartId.SH else 3
        out = -1j * dv.d[idx]
    elif name == "P0":
        out = -1j * dv.d[1]
    elif name == "P3":
        out = -1j * dv.d[3]
    elif name == "E3":
        out = -1j * dv.d[2]
    elif name.startswith("Ey"):
        out = -1j * dv.d[int(name[2])]
    elif name == "M2":
        out = -_sphere2_laplacian(dv, p2, 2, 3)
    elif name == "J2":
        beta = p1
        out = -(_radial(dv, 1, 2.0 * np.cos(beta) / np.sin(beta)) + _sphere2_laplacian(dv, p2, 2, 3) / np.sin(beta) ** 2)
    elif name == "NM2":
        b = p1
        out = -(_radial(dv, 1, 2.0 * np.cosh(b) / np.sinh(b)) + _sphere2_laplacian(dv, p2, 2, 3) / np.sinh(b) ** 2)
    elif name == "E2":
        out = -_flat_laplacian(chart, point, dv, 3)
    elif name == "Etilde2":
        out = -_flat_laplacian(chart, point, dv, 2)
    elif name == "H2":
        out = _hyperbolic_plane(dv, p1)
    else:  # pragma: no cover - guarded above
        raise GeneratorError(name)
    return _scalar(out)


def invariant_by_generators(chart, name: str, f: ScalarField, p, surface=Surface.HYPERBOLOID, eps=None, source="auto"):
    """The same invariants built by composing generator operators (cross-check)."""
    chart, surface = as_chart(chart), as_surface(surface)
    ctx, fj = _prepare(f, p, eps, chart, surface, 2, source)
    ap = ctx.apply

    def sq(names):
        return _sum(ap(ctx.gen(n), ap(ctx.gen(n), fj)) for n in names)

    if name == "M2":
        out = sq(("M1", "M2", "M3"))
    elif name == "J2":
        out = sq(("M1", "M2", "M3")) + sq(("P1", "P2", "P3"))
    elif name == "NM2":
        out = sq(("N1", "N2", "N3")) - sq(("M1", "M2", "M3"))
    elif name == "E2":
        out = sq(("E1", "E2", "E3"))
    elif name == "Etilde2":
        out = sq(("E1", "E2"))
    elif name == "H2":
        out = sq(("M3",)) - sq(("N1", "N2"))
    elif name in ("M3", "P0", "P3", "E3"):
        out = ap(ctx.gen(name), fj)
    elif name.startswith("Ey"):
        out = ap(ctx.gen(f"E{name[2]}"), fj)
    else:
        raise GeneratorError(f"invariant {name!r} has no generator form")
    return _scalar(out.value)

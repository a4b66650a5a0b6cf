"""Expansions of functions on H4+ over the chart bases, and related integral transforms.

Coefficients are inner products against the normalized bases of
:mod:`desitter.bases`, so that

    psi = sum over discrete labels, integral over continuous labels of
          plancherel_weight(label) * c(label) * Phi_label

and the Plancherel identity reads ||psi||^2 = sum/integral of
plancherel_weight * |c|^2.  Continuous labels are discretized on Gauss
nodes whose weights multiply the Plancherel density.

Every basis function factors into one piece per chart coordinate, so analysis
and synthesis are sequences of one-axis contractions over tensor grids.  The
O-type charts use rescaled transverse coordinates y = e^{-a/2} v, in which a
Gaussian bump around the origin has an a-independent width.
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .bases import (
    O_CONST,
    RHO_MIN,
    SpectralLabel,
    bessel_int_order,
    c4_values,
    c_radial,
    cone_angular,
    cone_coefficients,
    h4_values,
    h_radial,
    h_transverse,
    o_radial_table,
    plancherel_weight,
    s_radial,
    sh_radial,
    sh_transverse,
    spherical_bessel_factor,
)
from .charts import (
    ChartError,
    ChartId,
    ChartPoint,
    HomogeneousPoint,
    Surface,
    as_chart,
    as_surface,
    chart_map,
    density,
    inverse_map,
)
from .generators import ScalarField
from .specfn import sph_harm, sph_harm_3, sph_harm_3_norm, sphere3_radial

TWO_PI = 2.0 * math.pi


class TransformError(ValueError):
    pass


# ---------------------------------------------------------------------------
# truncation and grids


@dataclass(frozen=True)
class TruncationSpec:
    """Spectral caps and spatial grid resolution for one expansion.

    ``cap`` bounds the discrete labels (j, l, |m|, |m'|).  ``label_max`` and
    ``n_label`` set the Gauss rule of the second continuous label (nu, kappa,
    eta and q, tau, omega); ``label_max_ot`` and ``n_label_ot`` give the
    per-component rule of the OT wave vector.  ``radius`` is the extent of the spatial grid in
    geodesic distance from the origin x = (1, 0, 0, 0, 0).
    """

    rho_max: float = 8.0
    n_rho: int = 64
    cap: int = 6
    label_max: float = 10.0
    n_label: int = 80
    label_max_ot: float = 8.0
    n_label_ot: int = 56
    radius: float = 3.5
    n_radial: int = 48
    n_angle: int = 24
    n_circle: int = 24
    n_transverse: int = 56

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise TransformError(f"truncation field {f.name} must be a positive number")
            if f.type == "int" and int(v) != v:
                raise TransformError(f"truncation field {f.name} must be an integer")
        if self.n_rho < 8:
            raise TransformError("n_rho must be at least 8")
        if self.n_circle < 2 * self.cap + 1:
            raise TransformError("n_circle must resolve |m| <= cap (need n_circle >= 2 cap + 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TruncationSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise TransformError(f"unknown truncation fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> TruncationSpec:
        return cls.from_dict(json.loads(text))


def gauss_rule(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    t, w = leggauss(int(n))
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def halfline_rule(n: int, scale: float = 1.5) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre pulled back to [0, inf) through a = scale (1 + t) / (1 - t).

    Suited to integrands with Gaussian or exponential decay; 80 nodes reach
    double precision on weights like sinh^3(a) exp(-a^2).
    """
    if scale <= 0:
        raise TransformError("halfline_rule scale must be positive")
    t, w = leggauss(int(n))
    return scale * (1.0 + t) / (1.0 - t), w * 2.0 * scale / (1.0 - t) ** 2


def circle_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Equispaced rule on [0, 2 pi), exact for trigonometric polynomials of degree < n."""
    return TWO_PI * np.arange(n) / n, np.full(n, TWO_PI / n)


_O_TYPE = (ChartId.O, ChartId.OC, ChartId.OT)
_SCALED_AXES = {ChartId.O: 1, ChartId.OC: 2, ChartId.OT: 3}


@dataclass
class QuadratureGrid:
    """Tensor-product rule in grid coordinates, with the measure folded into the weights.

    For the O-type charts the grid coordinates of the transverse axes are
    v = e^{a/2} y; :meth:`params` returns the actual chart parameters.
    """

    chart: ChartId
    surface: Surface
    axes: tuple
    axis_weights: tuple
    radii: dict = field(default_factory=dict)

    def __post_init__(self):
        self.chart = as_chart(self.chart)
        self.surface = as_surface(self.surface)
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.axis_weights = tuple(np.asarray(w, dtype=float) for w in self.axis_weights)
        if self.chart is ChartId.H and self.surface is Surface.CONE:
            raise TransformError("the cone H chart covers two sheets; build cone grids in another chart")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def scaled(self) -> int:
        if self.surface is Surface.HYPERBOLOID:
            return _SCALED_AXES.get(self.chart, 0)
        return 0

    def params(self) -> list[np.ndarray]:
        """Chart parameters at the nodes, each of full grid shape."""
        mesh = list(np.meshgrid(*self.axes, indexing="ij"))
        if self.scaled:
            s = np.exp(-0.5 * mesh[0])
            for k in range(1, 1 + self.scaled):
                mesh[k] = mesh[k] * s
        return mesh

    @functools.cached_property
    def weights(self) -> np.ndarray:
        w = functools.reduce(np.multiply.outer, self.axis_weights)
        p = self.params()
        dens = density(self.chart, self.surface, p)
        if self.scaled:
            dens = dens * np.exp(-0.5 * self.scaled * p[0])
        return w * dens

    @property
    def nodes(self) -> np.ndarray:
        """Chart parameters of all nodes, shape (4, N)."""
        return np.stack([p.ravel() for p in self.params()])

    def chart_points(self) -> list[ChartPoint]:
        return [ChartPoint(self.chart, self.surface, tuple(col)) for col in self.nodes.T]

    def homogeneous(self) -> np.ndarray:
        return np.array(chart_map(self.chart, self.surface, self.params()))

    def volume(self) -> float:
        return float(self.weights.sum())


def build_grid(chart, surface, spec: TruncationSpec) -> QuadratureGrid:
    """Tensor Gauss rule covering the geodesic ball of radius ``spec.radius`` around the origin.

    On the cone the scale coordinate a runs over [-radius, radius] and the
    half-line coordinates over [0, radius].
    """
    chart, surface = as_chart(chart), as_surface(surface)
    d = float(spec.radius)
    ang = gauss_rule(0.0, math.pi, spec.n_angle)
    circ = circle_rule(spec.n_circle)
    half = gauss_rule(0.0, d, spec.n_radial)
    line = gauss_rule(-d, d, spec.n_radial)
    radii = {"radius": d}
    if surface is Surface.HYPERBOLOID:
        if chart is ChartId.S:
            rules = [half, ang, ang, circ]
        elif chart is ChartId.H:
            rules = [line, half, ang, circ]
        elif chart is ChartId.C:
            rules = [half, line, ang, circ]
        elif chart is ChartId.SH:
            rules = [half, half, circ, circ]
        else:
            # x0 = cosh a + |v|^2 / 2 on the unscaled grid coordinates
            vmax = 2.0 * math.sinh(d / 2.0)
            radii["transverse"] = vmax
            vhalf = gauss_rule(0.0, vmax, spec.n_transverse)
            vline = gauss_rule(-vmax, vmax, spec.n_transverse)
            if chart is ChartId.O:
                rules = [line, vhalf, ang, circ]
            elif chart is ChartId.OC:
                rules = [line, vhalf, vline, circ]
            else:
                rules = [line, vline, vline, vline]
    else:
        if chart is ChartId.S:
            rules = [line, ang, ang, circ]
        elif chart is ChartId.C:
            rules = [line, line, ang, circ]
        elif chart is ChartId.SH:
            rules = [line, half, circ, circ]
        elif chart is ChartId.O:
            rules = [line, half, ang, circ]
        elif chart is ChartId.OC:
            rules = [line, half, line, circ]
        elif chart is ChartId.OT:
            rules = [line, line, line, line]
        else:
            raise TransformError("the cone H chart covers two sheets; build cone grids in another chart")
    return QuadratureGrid(chart, surface, tuple(r[0] for r in rules), tuple(r[1] for r in rules), radii)


def build_section_grid(chart, spec: TruncationSpec, extent: float | None = None) -> QuadratureGrid:
    """Rule on the cone section a = 0 of ``chart``; non-compact axes span [-extent, extent] or [0, extent]."""
    chart = as_chart(chart)
    e = float(spec.radius if extent is None else extent)
    ang = gauss_rule(0.0, math.pi, spec.n_angle)
    circ = circle_rule(spec.n_circle)
    half = gauss_rule(0.0, e, spec.n_radial)
    line = gauss_rule(-e, e, spec.n_radial)
    zero = (np.zeros(1), np.ones(1))
    table = {
        ChartId.S: [zero, ang, ang, circ],
        ChartId.C: [zero, line, ang, circ],
        ChartId.SH: [zero, half, circ, circ],
        ChartId.O: [zero, half, ang, circ],
        ChartId.OC: [zero, half, line, circ],
        ChartId.OT: [zero, line, line, line],
    }
    if chart not in table:
        raise TransformError("the cone H chart covers two sheets; build section grids in another chart")
    rules = table[chart]
    return QuadratureGrid(chart, Surface.CONE, tuple(r[0] for r in rules), tuple(r[1] for r in rules), {"extent": e})


def point_grid(p: ChartPoint) -> QuadratureGrid:
    """A one-node grid at ``p`` (unit weight); used for pointwise synthesis."""
    params = list(p.params)
    if p.surface is Surface.HYPERBOLOID and p.chart in _SCALED_AXES:
        s = math.exp(0.5 * params[0])
        for k in range(1, 1 + _SCALED_AXES[p.chart]):
            params[k] *= s
    return QuadratureGrid(p.chart, p.surface, tuple(np.array([v]) for v in params), tuple(np.ones(1) for _ in params))


# ---------------------------------------------------------------------------
# fields on grids


def evaluate_on_grid(f, grid: QuadratureGrid) -> np.ndarray:
    """Values of ``f`` at the grid nodes (full grid shape).

    ``f`` is a :class:`ScalarField`, a callable of homogeneous coordinates
    (x0, ..., x4), or an array already holding the values at the nodes.
    Fields written in another chart are reached through the homogeneous
    coordinates.
    """
    if isinstance(f, np.ndarray):
        if f.size != math.prod(grid.shape):
            raise TransformError(f"value table has {f.size} entries, grid has {math.prod(grid.shape)} nodes")
        vals = f.reshape(grid.shape).astype(complex)
        if not np.all(np.isfinite(vals)):
            raise TransformError("value table holds non-finite entries")
        return vals
    params = grid.params()
    if not isinstance(f, ScalarField):
        vals = f(*chart_map(grid.chart, grid.surface, params))
    elif f.chart is None or (f.chart is grid.chart and (f.surface is None or f.surface is grid.surface)):
        vals = f(params, None)
    else:
        x = np.array(chart_map(grid.chart, grid.surface, params))
        p2, eps, _ = inverse_map(f.chart, grid.surface, x)
        vals = f(list(p2), eps)
    vals = np.broadcast_to(np.asarray(vals, dtype=complex), grid.shape)
    if not np.all(np.isfinite(vals)):
        raise TransformError("field evaluation produced non-finite values on the grid")
    return vals


CSV_COLUMNS = ("param1", "param2", "param3", "param4", "weight", "value_re", "value_im")


def write_grid_csv(stream, grid: QuadratureGrid, values) -> None:
    """One row per node: chart parameters, quadrature weight, real and imaginary value."""
    vals = np.broadcast_to(np.asarray(values, dtype=complex), grid.shape).ravel()
    nodes = grid.nodes
    w = grid.weights.ravel()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i in range(vals.size):
        writer.writerow([repr(float(v)) for v in (*nodes[:, i], w[i], vals[i].real, vals[i].imag)])


def read_grid_csv(stream, grid: QuadratureGrid, tol: float = 1e-9) -> np.ndarray:
    """Values from a grid dump whose rows must match the nodes of ``grid`` in order."""
    reader = csv.DictReader(stream)
    need = {"param1", "param2", "param3", "param4", "value_re", "value_im"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise TransformError(f"table needs columns {sorted(need)}")
    try:
        rows = np.array([[float(r[c]) for c in ("param1", "param2", "param3", "param4", "value_re", "value_im")] for r in reader])
    except ValueError as exc:
        raise TransformError(f"table holds a non-numeric entry: {exc}") from None
    nodes = grid.nodes
    if rows.shape[0] != nodes.shape[1]:
        raise TransformError(f"table has {rows.shape[0]} rows, grid has {nodes.shape[1]} nodes")
    if np.max(np.abs(rows[:, :4].T - nodes)) > tol * (1.0 + np.max(np.abs(nodes))):
        raise TransformError("table parameters do not match the quadrature nodes")
    return (rows[:, 4] + 1j * rows[:, 5]).reshape(grid.shape)


def inner_product(f, g, grid: QuadratureGrid) -> complex:
    """<f, g> = sum_i w_i f(p_i) conj(g(p_i))."""
    fv = evaluate_on_grid(f, grid)
    if g is f:
        return complex(np.sum(grid.weights * np.abs(fv) ** 2), 0.0)
    return complex(np.sum(grid.weights * fv * np.conj(evaluate_on_grid(g, grid))))


def gaussian_bump(alpha: float, center=(1.0, 0.0, 0.0, 0.0, 0.0)):
    """exp(-alpha ([x, c] - 1)) as a function of homogeneous coordinates."""
    c = np.asarray(center.x if isinstance(center, HomogeneousPoint) else center, dtype=float)
    if abs(c[0] ** 2 - np.sum(c[1:] ** 2) - 1.0) > 1e-10 or c[0] <= 0:
        raise TransformError("bump center must lie on the hyperboloid")
    if alpha <= 0:
        raise TransformError("alpha must be positive")

    def g(x0, x1, x2, x3, x4):
        form = x0 * c[0] - x1 * c[1] - x2 * c[2] - x3 * c[3] - x4 * c[4]
        return np.exp(-alpha * (form - 1.0))

    return g


def hyperboloid_point(distance: float, direction=(1.0, 0.0, 0.0, 0.0)) -> tuple[float, ...]:
    """Point at geodesic ``distance`` from the origin along a spatial ``direction``."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return (math.cosh(distance),) + tuple(math.sinh(distance) * n)


BUMP_BATTERY = (
    (2.0, hyperboloid_point(0.0)),
    (2.5, hyperboloid_point(0.25, (1.0, 0.0, 0.0, 0.0))),
    (3.0, hyperboloid_point(0.3, (0.5, -0.5, 0.5, 0.5))),
)


# ---------------------------------------------------------------------------
# coefficient sets

_LABEL_AXES = {
    ChartId.S: ("rho", "j", "l", "m"),
    ChartId.H: ("rho", "nu", "eps", "l", "m"),
    ChartId.O: ("rho", "kappa", "l", "m"),
    ChartId.OC: ("rho", "eta", "q", "m"),
    ChartId.OT: ("rho", "k1", "k2", "k3"),
    ChartId.C: ("rho", "tau", "l", "m"),
    ChartId.SH: ("rho", "omega", "mprime", "m"),
}


def label_axes(chart, spec: TruncationSpec) -> tuple[dict, dict]:
    """Label nodes and their quadrature weights (1 for discrete labels)."""
    chart = as_chart(chart)
    cap, lm, n = spec.cap, float(spec.label_max), spec.n_label
    rho = gauss_rule(0.0, spec.rho_max, spec.n_rho)
    ls = np.arange(cap + 1)
    ms = np.arange(-cap, cap + 1)
    ones = lambda v: np.ones(v.size)  # noqa: E731
    pos = gauss_rule(0.0, lm, n)
    sym = gauss_rule(-lm, lm, n)
    if chart is ChartId.S:
        ax = {"rho": rho, "j": (ls, ones(ls)), "l": (ls, ones(ls)), "m": (ms, ones(ms))}
    elif chart is ChartId.H:
        eps = np.array([1, -1])
        ax = {"rho": rho, "nu": pos, "eps": (eps, ones(eps)), "l": (ls, ones(ls)), "m": (ms, ones(ms))}
    elif chart is ChartId.O:
        ax = {"rho": rho, "kappa": pos, "l": (ls, ones(ls)), "m": (ms, ones(ms))}
    elif chart is ChartId.OC:
        ax = {"rho": rho, "eta": pos, "q": sym, "m": (ms, ones(ms))}
    elif chart is ChartId.OT:
        k = gauss_rule(-spec.label_max_ot, spec.label_max_ot, spec.n_label_ot)
        ax = {"rho": rho, "k1": k, "k2": k, "k3": k}
    elif chart is ChartId.C:
        ax = {"rho": rho, "tau": sym, "l": (ls, ones(ls)), "m": (ms, ones(ms))}
    else:
        ax = {"rho": rho, "omega": pos, "mprime": (ms, ones(ms)), "m": (ms, ones(ms))}
    return {k: v[0] for k, v in ax.items()}, {k: v[1] for k, v in ax.items()}


def _label_mask(chart: ChartId, axes: dict) -> np.ndarray:
    shape = tuple(v.size for v in axes.values())
    mask = np.ones(shape, dtype=bool)
    if chart is ChartId.S:
        j, l, m = np.meshgrid(axes["j"], axes["l"], axes["m"], indexing="ij")
        mask &= ((l <= j) & (np.abs(m) <= l))[None]
    elif chart in (ChartId.H, ChartId.O, ChartId.C):
        l, m = np.meshgrid(axes["l"], axes["m"], indexing="ij")
        mask &= (np.abs(m) <= l).reshape((1,) * (len(shape) - 2) + l.shape)
    return np.broadcast_to(mask, shape)


def _extra_weight(chart: ChartId, axes: dict) -> np.ndarray:
    """Chart-specific factor of the Plancherel density, broadcast over the label axes."""
    names = list(axes)
    nd = len(names)

    def along(name, values):
        shape = [1] * nd
        shape[names.index(name)] = -1
        return np.asarray(values, dtype=float).reshape(shape)

    if chart is ChartId.H:
        return along("nu", axes["nu"] ** 2)
    if chart is ChartId.O:
        return along("kappa", axes["kappa"] ** 2)
    if chart is ChartId.OC:
        return along("eta", axes["eta"])
    if chart is ChartId.SH:
        w = axes["omega"]
        return along("omega", w * np.tanh(math.pi * w))
    return np.ones((1,) * nd)


@dataclass
class CoefficientSet:
    """Expansion coefficients c(label) = <f, Phi_label> on a tensor grid of labels."""

    chart: ChartId
    axes: dict
    axis_weights: dict
    values: np.ndarray
    spec: TruncationSpec = field(default_factory=TruncationSpec)

    def __post_init__(self):
        self.chart = as_chart(self.chart)
        self.values = np.asarray(self.values, dtype=complex)
        shape = tuple(v.size for v in self.axes.values())
        if self.values.shape != shape:
            raise TransformError(f"coefficient array has shape {self.values.shape}, label axes give {shape}")
        if list(self.axes) != list(_LABEL_AXES[self.chart]):
            raise TransformError(f"label axes {list(self.axes)} do not match chart {self.chart.value}")
        if not np.all(np.isfinite(self.values)):
            raise TransformError("coefficients must be finite")
        self.values = np.where(self.mask, self.values, 0.0)

    @classmethod
    def zeros(cls, chart, spec: TruncationSpec) -> CoefficientSet:
        axes, w = label_axes(chart, spec)
        return cls(chart, axes, w, np.zeros(tuple(v.size for v in axes.values()), dtype=complex), spec)

    @property
    def mask(self) -> np.ndarray:
        return _label_mask(self.chart, self.axes)

    def measure(self) -> np.ndarray:
        """Quadrature weight times Plancherel density for every label (0 on invalid labels)."""
        names = list(self.axes)
        nd = len(names)
        w = np.ones((1,) * nd)
        for i, name in enumerate(names):
            shape = [1] * nd
            shape[i] = -1
            w = w * self.axis_weights[name].reshape(shape)
        rho = self.axes["rho"].reshape((-1,) + (1,) * (nd - 1))
        base = rho * (rho**2 + 0.25) * np.tanh(math.pi * rho)
        return np.where(self.mask, w * base * _extra_weight(self.chart, self.axes), 0.0)

    def norm_squared(self) -> float:
        return float(np.sum(self.measure() * np.abs(self.values) ** 2))

    def _compatible(self, other: CoefficientSet) -> None:
        if self.chart is not other.chart or self.spec != other.spec:
            raise TransformError("coefficient sets live on different label grids")

    def __add__(self, other: CoefficientSet) -> CoefficientSet:
        self._compatible(other)
        return CoefficientSet(self.chart, self.axes, self.axis_weights, self.values + other.values, self.spec)

    def __mul__(self, s) -> CoefficientSet:
        return CoefficientSet(self.chart, self.axes, self.axis_weights, self.values * s, self.spec)

    __rmul__ = __mul__

    def label_at(self, index: tuple[int, ...]) -> SpectralLabel:
        vals = {name: self.axes[name][i] for name, i in zip(self.axes, index)}
        c = self.chart
        rho = float(vals.pop("rho"))
        if c is ChartId.OT:
            return SpectralLabel(c, rho, kvec=(float(vals["k1"]), float(vals["k2"]), float(vals["k3"])))
        kw = {k: (int(v) if k in ("j", "l", "m", "mprime", "eps") else float(v)) for k, v in vals.items()}
        return SpectralLabel(c, rho, **kw)

    def items(self, threshold: float = 0.0):
        """Yield (label, coefficient) for valid labels with |c| > threshold, in array order."""
        for index in zip(*np.nonzero(self.mask & (np.abs(self.values) > threshold))):
            yield self.label_at(index), complex(self.values[index])

    @property
    def entries(self) -> dict:
        return dict(self.items())

    def to_dict(self, threshold: float = 0.0, max_entries: int | None = None) -> dict:
        idx = np.argwhere(self.mask & (np.abs(self.values) > threshold))
        mags = np.abs(self.values[tuple(idx.T)])
        order = np.argsort(-mags, kind="stable")
        if max_entries is not None:
            order = order[:max_entries]
        out = []
        for k in order:
            index = tuple(idx[k])
            v = complex(self.values[index])
            out.append({"label": self.label_at(index).to_dict(), "re": v.real, "im": v.imag})
        return {"chart": self.chart.value, "spec": self.spec.to_dict(), "n_labels": int(self.mask.sum()), "entries": out}

    @classmethod
    def from_dict(cls, d: dict) -> CoefficientSet:
        """Inverse of :meth:`to_dict`; labels dropped by a threshold come back as zero."""
        try:
            chart = as_chart(d["chart"])
            spec = TruncationSpec.from_dict(d["spec"])
            entries = d["entries"]
        except (KeyError, TypeError) as exc:
            raise TransformError(f"coefficient record is missing {exc}") from None
        out = cls.zeros(chart, spec)
        keys = [(name, _axis_lookup(ax)) for name, ax in out.axes.items()]
        for e in entries:
            lab = SpectralLabel.from_dict(e["label"])
            if lab.chart is not chart:
                raise TransformError("coefficient entry belongs to another chart")
            index = []
            for name, lookup in keys:
                if name in ("k1", "k2", "k3"):
                    v = lab.kvec["k1k2k3".index(name) // 2]
                else:
                    v = getattr(lab, name)
                hit = lookup(v)
                if hit is None:
                    raise TransformError(f"label value {name}={v} is not a node of the truncation grid")
                index.append(hit)
            out.values[tuple(index)] = complex(e["re"], e["im"])
        return out


def _axis_lookup(ax: np.ndarray):
    """Map a label value back to its node index on one (sorted) label axis."""
    ax = np.asarray(ax, dtype=float)
    order = np.argsort(ax)
    sorted_ax = ax[order]

    def find(v):
        i = int(np.searchsorted(sorted_ax, v))
        for j in (i - 1, i):
            if 0 <= j < sorted_ax.size and abs(sorted_ax[j] - v) <= 1e-12 + 1e-12 * abs(v):
                return int(order[j])
        return None

    return find


# ---------------------------------------------------------------------------
# per-chart analysis and synthesis plans


def _sphere_tables(theta: np.ndarray, phi: np.ndarray, cap: int):
    """E[m, phi] = e^{-i m phi} and the real theta-part T[l, m, theta] of Y_lm."""
    ms = np.arange(-cap, cap + 1)
    e = np.exp(-1j * np.outer(ms, phi))
    t = np.zeros((cap + 1, ms.size, theta.size))
    for l in range(cap + 1):
        for i, m in enumerate(ms):
            if abs(m) <= l:
                t[l, i] = np.real(sph_harm(l, int(m), theta, 0.0))
    return e, t


def _circle_table(phi: np.ndarray, cap: int) -> np.ndarray:
    return np.exp(-1j * np.outer(np.arange(-cap, cap + 1), phi))


class _Plan:
    """Tables of basis factors on one grid for one label grid."""

    def __init__(self, chart: ChartId, spec: TruncationSpec, grid: QuadratureGrid):
        self.chart, self.spec, self.grid = chart, spec, grid
        self.axes, self.axis_weights = label_axes(chart, spec)
        getattr(self, f"_tables_{chart.value.lower()}")()

    # -- tables ----------------------------------------------------------
    def _tables_s(self):
        a, beta, theta, phi = self.grid.axes
        cap, ax = self.spec.cap, self.axes
        self.E, self.T = _sphere_tables(theta, phi, cap)
        b = np.zeros((cap + 1, cap + 1, beta.size))
        for j in range(cap + 1):
            for l in range(j + 1):
                b[j, l] = sph_harm_3_norm(j, l) * sphere3_radial(j, l, beta)
        self.B = b
        self.R = s_radial(ax["rho"][None, :, None], ax["j"][None, None, :], a[:, None, None])

    def _tables_h(self):
        a, b, theta, phi = self.grid.axes
        ax = self.axes
        self.E, self.T = _sphere_tables(theta, phi, self.spec.cap)
        self.V = h_transverse(ax["nu"][:, None, None], ax["l"][None, :, None], b[None, None, :])
        self.R = h_radial(ax["rho"][None, :, None, None], ax["nu"][None, None, :, None], ax["eps"][None, None, None, :], a[:, None, None, None])

    def _tables_o(self):
        a, s, theta, phi = self.grid.axes
        ax = self.axes
        self.E, self.T = _sphere_tables(theta, phi, self.spec.cap)
        kr = ax["kappa"][None, :, None] * (np.exp(-0.5 * a)[:, None, None] * s[None, None, :])
        self.J = np.stack([spherical_bessel_factor(l, kr) for l in ax["l"]], axis=-1)
        self.R = O_CONST[ChartId.O] * o_radial_table(ax["rho"], ax["kappa"], a)

    def _tables_oc(self):
        a, s, t, phi = self.grid.axes
        ax = self.axes
        self.E = _circle_table(phi, self.spec.cap)
        sc = np.exp(-0.5 * a)
        self.Q = np.exp(-1j * ax["q"][None, :, None] * (sc[:, None, None] * t[None, None, :]))
        x = ax["eta"][None, :, None] * (sc[:, None, None] * s[None, None, :])
        self.J = np.stack([bessel_int_order(int(m), x) for m in ax["m"]], axis=-1)
        kap = np.hypot(ax["eta"][:, None], ax["q"][None, :])
        self.R = O_CONST[ChartId.OC] * o_radial_table(ax["rho"], kap.ravel(), a).reshape(a.size, ax["rho"].size, *kap.shape)

    def _tables_ot(self):
        a, v1, v2, v3 = self.grid.axes
        ax = self.axes
        sc = np.exp(-0.5 * a)
        self.F = [np.exp(-1j * ax[k][None, :, None] * (sc[:, None, None] * v[None, None, :])) for k, v in zip(("k1", "k2", "k3"), (v1, v2, v3))]
        kk = np.sqrt(ax["k1"][:, None, None] ** 2 + ax["k2"][None, :, None] ** 2 + ax["k3"][None, None, :] ** 2)
        uniq, inv = np.unique(np.round(kk, 12), return_inverse=True)
        self.kidx = inv.reshape(kk.shape)
        self.R = O_CONST[ChartId.OT] * o_radial_table(ax["rho"], uniq, a)

    def _tables_c(self):
        a, b, theta, phi = self.grid.axes
        ax = self.axes
        self.E, self.T = _sphere_tables(theta, phi, self.spec.cap)
        self.P = np.exp(-1j * np.outer(ax["tau"], b))
        self.R = c_radial(ax["rho"][None, :, None, None], ax["tau"][None, None, :, None], ax["l"][None, None, None, :], a[:, None, None, None])

    def _tables_sh(self):
        a, b, phi, big_phi = self.grid.axes
        ax = self.axes
        cap = self.spec.cap
        self.E1 = _circle_table(phi, cap)
        self.E2 = _circle_table(big_phi, cap)
        self.Q = sh_transverse(ax["omega"][:, None, None], ax["m"][None, :, None], b[None, None, :])
        mt = np.arange(cap + 1)
        r = sh_radial(ax["rho"][None, :, None, None], ax["omega"][None, None, :, None], mt[None, None, None, :], a[:, None, None, None])
        self.R = r[..., np.abs(ax["mprime"])]

    # -- analysis: G = f * weights on the grid -> coefficient array ---------
    def analyze(self, g: np.ndarray) -> np.ndarray:
        return getattr(self, f"_analyze_{self.chart.value.lower()}")(g)

    def synthesize(self, cw: np.ndarray) -> np.ndarray:
        """Grid values of sum over labels of cw(label) Phi_label."""
        return getattr(self, f"_synth_{self.chart.value.lower()}")(cw)

    def _to_lm(self, g):
        gm = np.einsum("xyzp,mp->xyzm", g, self.E, optimize=True)
        return np.einsum("xytm,lmt->xylm", gm, self.T, optimize=True)

    def _from_lm(self, glm):
        gm = np.einsum("xylm,lmt->xytm", glm, self.T, optimize=True)
        return np.einsum("xytm,mp->xytp", gm, np.conj(self.E), optimize=True)

    def _analyze_s(self, g):
        gjlm = np.einsum("ablm,jlb->ajlm", self._to_lm(g), self.B, optimize=True)
        return np.einsum("ajlm,arj->rjlm", gjlm, self.R, optimize=True)

    def _synth_s(self, cw):
        gjlm = np.einsum("rjlm,arj->ajlm", cw, self.R, optimize=True)
        return self._from_lm(np.einsum("ajlm,jlb->ablm", gjlm, self.B, optimize=True))

    def _analyze_h(self, g):
        g2 = np.einsum("ablm,nlb->anlm", self._to_lm(g), self.V, optimize=True)
        return np.einsum("anlm,arne->rnelm", g2, np.conj(self.R), optimize=True)

    def _synth_h(self, cw):
        g2 = np.einsum("rnelm,arne->anlm", cw, self.R, optimize=True)
        return self._from_lm(np.einsum("anlm,nlb->ablm", g2, self.V, optimize=True))

    def _analyze_o(self, g):
        g2 = np.einsum("aslm,aksl->aklm", self._to_lm(g), self.J, optimize=True)
        return np.einsum("aklm,ark->rklm", g2, self.R, optimize=True)

    def _synth_o(self, cw):
        g2 = np.einsum("rklm,ark->aklm", cw, self.R, optimize=True)
        return self._from_lm(np.einsum("aklm,aksl->aslm", g2, self.J, optimize=True))

    def _analyze_oc(self, g):
        gm = np.einsum("astp,mp->astm", g, self.E, optimize=True)
        gq = np.einsum("astm,aqt->asqm", gm, self.Q, optimize=True)
        ge = np.einsum("asqm,aesm->aeqm", gq, self.J, optimize=True)
        return np.einsum("aeqm,areq->reqm", ge, self.R, optimize=True)

    def _synth_oc(self, cw):
        ge = np.einsum("reqm,areq->aeqm", cw, self.R, optimize=True)
        gq = np.einsum("aeqm,aesm->asqm", ge, self.J, optimize=True)
        gm = np.einsum("asqm,aqt->astm", gq, np.conj(self.Q), optimize=True)
        return np.einsum("astm,mp->astp", gm, np.conj(self.E), optimize=True)

    def _analyze_ot(self, g):
        f1, f2, f3 = self.F
        g = np.einsum("auvw,aiu->aivw", g, f1, optimize=True)
        g = np.einsum("aivw,ajv->aijw", g, f2, optimize=True)
        g = np.einsum("aijw,akw->aijk", g, f3, optimize=True)
        out = np.empty((self.axes["rho"].size,) + g.shape[1:], dtype=complex)
        flat = g.reshape(g.shape[0], -1)
        idx = self.kidx.ravel()
        for r in range(out.shape[0]):
            out[r] = np.einsum("aq,aq->q", flat, self.R[:, r, idx]).reshape(g.shape[1:])
        return out

    def _synth_ot(self, cw):
        f1, f2, f3 = (np.conj(f) for f in self.F)
        na = self.R.shape[0]
        idx = self.kidx.ravel()
        flat = cw.reshape(cw.shape[0], -1)
        g = np.zeros((na, flat.shape[1]), dtype=complex)
        for r in range(cw.shape[0]):
            g += self.R[:, r, idx] * flat[r][None, :]
        g = g.reshape((na,) + cw.shape[1:])
        g = np.einsum("aijk,akw->aijw", g, f3, optimize=True)
        g = np.einsum("aijw,ajv->aivw", g, f2, optimize=True)
        return np.einsum("aivw,aiu->auvw", g, f1, optimize=True)

    def _analyze_c(self, g):
        g2 = np.einsum("ablm,tb->atlm", self._to_lm(g), self.P, optimize=True)
        return np.einsum("atlm,artl->rtlm", g2, np.conj(self.R), optimize=True)

    def _synth_c(self, cw):
        g2 = np.einsum("rtlm,artl->atlm", cw, self.R, optimize=True)
        return self._from_lm(np.einsum("atlm,tb->ablm", g2, np.conj(self.P), optimize=True))

    def _analyze_sh(self, g):
        g = np.einsum("abpq,mp->abmq", g, self.E1, optimize=True)
        g = np.einsum("abmq,nq->abmn", g, self.E2, optimize=True)
        g2 = np.einsum("abmn,wmb->awmn", g, self.Q, optimize=True)
        return np.einsum("awmn,arwn->rwnm", g2, np.conj(self.R), optimize=True)

    def _synth_sh(self, cw):
        g2 = np.einsum("rwnm,arwn->awmn", cw, self.R, optimize=True)
        g = np.einsum("awmn,wmb->abmn", g2, self.Q, optimize=True)
        g = np.einsum("abmn,nq->abmq", g, np.conj(self.E2), optimize=True)
        return np.einsum("abmq,mp->abpq", g, np.conj(self.E1), optimize=True)


@functools.lru_cache(maxsize=8)
def _cached_plan(chart: ChartId, spec: TruncationSpec) -> _Plan:
    return _Plan(chart, spec, build_grid(chart, Surface.HYPERBOLOID, spec))


def plan_for(chart, spec: TruncationSpec) -> _Plan:
    return _cached_plan(as_chart(chart), spec)


def analyze(f, chart, spec: TruncationSpec, grid: QuadratureGrid | None = None) -> CoefficientSet:
    """Coefficients <f, Phi_label> at every label of the truncated label grid."""
    chart = as_chart(chart)
    if grid is None:
        plan = plan_for(chart, spec)
    else:
        if grid.chart is not chart or grid.surface is not Surface.HYPERBOLOID:
            raise TransformError("grid does not belong to the requested chart on the hyperboloid")
        plan = _Plan(chart, spec, grid)
    g = evaluate_on_grid(f, plan.grid) * plan.grid.weights
    return CoefficientSet(chart, plan.axes, plan.axis_weights, plan.analyze(g), spec)


def synthesize_on_grid(coeffs: CoefficientSet, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Truncated expansion evaluated at every node of ``grid`` (default: the analysis grid)."""
    plan = plan_for(coeffs.chart, coeffs.spec) if grid is None else _Plan(coeffs.chart, coeffs.spec, grid)
    return plan.synthesize(coeffs.values * coeffs.measure())


def synthesize(coeffs: CoefficientSet, p: ChartPoint) -> complex:
    """Truncated expansion evaluated at one chart point."""
    if p.chart is not coeffs.chart or p.surface is not Surface.HYPERBOLOID:
        raise TransformError("point must lie on the hyperboloid in the coefficients' chart")
    if not np.any(coeffs.values):
        return 0j
    return complex(synthesize_on_grid(coeffs, point_grid(p)).ravel()[0])


def roundtrip_error(f, coeffs: CoefficientSet) -> float:
    """L2-relative error of the truncated expansion on the analysis grid."""
    plan = plan_for(coeffs.chart, coeffs.spec)
    fv = evaluate_on_grid(f, plan.grid)
    rec = plan.synthesize(coeffs.values * coeffs.measure())
    w = plan.grid.weights
    den = float(np.sum(w * np.abs(fv) ** 2))
    return math.sqrt(float(np.sum(w * np.abs(fv - rec) ** 2)) / den) if den > 0 else 0.0


def plancherel_check(f, coeffs: CoefficientSet, grid: QuadratureGrid | None = None) -> tuple[float, float]:
    """(integral of |f|^2 over the grid, Plancherel-weighted sum of |c|^2)."""
    if grid is None:
        grid = plan_for(coeffs.chart, coeffs.spec).grid
    lhs = float(np.sum(grid.weights * np.abs(evaluate_on_grid(f, grid)) ** 2))
    return lhs, coeffs.norm_squared()


# Printed coefficient conventions differ from <f, Phi> by a constant modulus;
# PRINTED_SCALE[c] = |A| / |<f, Phi>| and the printed Plancherel prefactor is
# 1 / PRINTED_SCALE[c]^2.
PRINTED_SCALE = {
    ChartId.S: (2.0 * math.pi) ** 2,
    ChartId.H: (2.0 * math.pi) ** 2,
    ChartId.O: 2.0 * (2.0 * math.pi) ** 1.5,
    ChartId.OC: (2.0 * math.pi) ** 2,
    ChartId.OT: (2.0 * math.pi) ** 2,
    ChartId.C: (2.0 * math.pi) ** 1.5,
    ChartId.SH: (2.0 * math.pi) ** 2,
}


def printed_plancherel_rhs(coeffs: CoefficientSet) -> float:
    """Plancherel sum in the printed normalization: prefactor times the weighted |A|^2."""
    scale = PRINTED_SCALE[coeffs.chart]
    a_sq = np.abs(coeffs.values * scale) ** 2
    return float(np.sum(coeffs.measure() * a_sq) / scale**2)


# ---------------------------------------------------------------------------
# wave packets


@dataclass(frozen=True)
class WavePacket:
    """Gaussian window exp(-(rho - center)^2 / (2 width^2)) in the continuous label rho."""

    center: float
    width: float = 0.2

    def __post_init__(self):
        if not self.width > 0:
            raise TransformError("packet width must be positive")
        if not self.center > 0:
            raise TransformError("packet center must be positive")

    def nodes(self, n: int = 32) -> tuple[np.ndarray, np.ndarray]:
        """Gauss nodes over center +- 6 width (clipped at rho_min) with window values folded in."""
        lo = max(RHO_MIN, self.center - 6.0 * self.width)
        r, w = gauss_rule(lo, self.center + 6.0 * self.width, n)
        return r, w * self.window(r)

    def window(self, rho):
        return np.exp(-0.5 * ((np.asarray(rho) - self.center) / self.width) ** 2)


def packet_overlap(p: WavePacket, q: WavePacket, n: int = 400) -> float:
    """Continuum value of <Phi_p, Phi_q> = integral of g_p g_q / (rho (rho^2 + 1/4) tanh(pi rho))."""
    lo = max(RHO_MIN, min(p.center - 8 * p.width, q.center - 8 * q.width))
    hi = max(p.center + 8 * p.width, q.center + 8 * q.width)
    r, w = gauss_rule(lo, hi, n)
    dens = r * (r * r + 0.25) * np.tanh(math.pi * r)
    return float(np.sum(w * p.window(r) * q.window(r) / dens))


def _radial_split(label: SpectralLabel, params):
    """(radial(rho, a), rho-independent remainder) for charts whose basis factors that way.

    Returns None for jets and for the O-type charts, whose radial factor also
    depends on the transverse coordinates.
    """
    if not all(isinstance(p, np.ndarray) for p in params):
        return None
    a, p1, p2, p3 = params
    c = label.chart
    if c is ChartId.S:
        return (lambda r, x: s_radial(r, label.j, x)), sph_harm_3(label.j, label.l, label.m, p1, p2, p3)
    if c is ChartId.H:
        return (lambda r, x: h_radial(r, label.nu, label.eps, x)), h_transverse(label.nu, label.l, p1) * sph_harm(label.l, label.m, p2, p3)
    if c is ChartId.C:
        return (lambda r, x: c_radial(r, label.tau, label.l, x)), np.exp(1j * label.tau * p1) * sph_harm(label.l, label.m, p2, p3)
    if c is ChartId.SH:
        ang = sh_transverse(label.omega, label.m, p1) * np.exp(1j * (label.m * p2 + label.mprime * p3))
        return (lambda r, x: sh_radial(r, label.omega, label.mprime, x)), ang
    return None


def wave_packet(label: SpectralLabel, packet: WavePacket, surface, n: int = 32) -> ScalarField:
    """Superposition of ``label``'s basis functions over rho with the packet window."""
    surface = as_surface(surface)
    rhos, ws = packet.nodes(n)
    labels = [label.replace(rho=float(r)) for r in rhos]

    if surface is Surface.HYPERBOLOID:

        def fn(params, eps=None):
            split = _radial_split(label, params)
            if split is None:
                return sum(w * h4_values(lab, params) for w, lab in zip(ws, labels))
            radial, angular = split
            a_unique, inverse = np.unique(np.asarray(params[0]), return_inverse=True)
            rad = sum(w * radial(lab.rho, a_unique) for w, lab in zip(ws, labels))
            return rad[inverse].reshape(np.shape(params[0])) * angular

    else:
        ang_label = labels[0]

        def fn(params, eps=None):
            a = params[0]
            rad = 0.0
            for w, lab in zip(ws, labels):
                cp, cm = cone_coefficients(lab)
                rad = rad + w * (cp * np.exp(a * complex(-1.5, lab.rho)) + cm * np.exp(a * complex(-1.5, -lab.rho)))
            out = rad * cone_angular(ang_label, *params[1:])
            if ang_label.chart is ChartId.H:
                sheet = np.ones(np.shape(a)) if eps is None else np.asarray(eps)
                out = out * (sheet == ang_label.eps)
            return out

    return ScalarField(fn, label.chart, surface, "wave_packet")


# ---------------------------------------------------------------------------
# transition coefficients


def _branch_table(labels, x: np.ndarray, sign: int) -> np.ndarray:
    """Rows C_sign e^{(-3/2 + i sign rho) a} times the angular factor of each label at cone points x."""
    branch = "plus" if sign > 0 else "minus"
    cache = {}
    rows = []
    for lab in labels:
        if lab.chart not in cache:
            cache[lab.chart] = inverse_map(lab.chart, Surface.CONE, x)
        params, eps, _ = cache[lab.chart]
        rows.append(c4_values(lab, list(params), eps if lab.chart is ChartId.H else None, branch))
    return np.array(rows)


def _spectral_density(rho: float) -> float:
    return rho * (rho * rho + 0.25) * math.tanh(math.pi * rho)


def _check_section(surface, grid: QuadratureGrid) -> None:
    if as_surface(surface) is not Surface.CONE:
        raise TransformError("transition coefficients are computed on the cone")
    if grid.surface is not Surface.CONE or grid.axes[0].size != 1 or grid.axes[0][0] != 0.0:
        raise TransformError("transition coefficients need a cone section grid (a = 0)")


def transition_matrix(labels_a, labels_b, surface, grid: QuadratureGrid) -> np.ndarray:
    """Matrix of :func:`transition_coefficients` over two label lists sharing one rho.

    <Phi_a(rho'), Phi_b(rho)> = delta(rho - rho') / w(rho) * T, with
    w(rho) = rho (rho^2 + 1/4) tanh(pi rho).  Under x -> e^t x every chart's
    scale coordinate shifts by t and d^4x/x0 gains e^{3t}, so the t-integral
    yields 2 pi delta(rho - rho') separately for the e^{(-3/2 + i rho) a} and
    e^{(-3/2 - i rho) a} branches, and T = 2 pi w(rho) times the sum over
    branches of the overlap on the section a = 0 of ``grid``'s chart.
    """
    _check_section(surface, grid)
    labels_a, labels_b = list(labels_a), list(labels_b)
    rho = labels_a[0].rho
    for lab in labels_a + labels_b:
        if abs(lab.rho - rho) > 1e-12 * max(1.0, rho):
            raise TransformError("transition coefficients need equal rho on both sides")
    x = grid.homogeneous().reshape(5, -1)
    w = grid.weights.ravel()
    out = np.zeros((len(labels_a), len(labels_b)), dtype=complex)
    for sign in (1, -1):
        va = _branch_table(labels_a, x, sign)
        vb = _branch_table(labels_b, x, sign)
        out += (np.conj(va) * w) @ vb.T
    return TWO_PI * _spectral_density(rho) * out


def transition_coefficients(label_a: SpectralLabel, label_b: SpectralLabel, surface, grid: QuadratureGrid) -> complex:
    """Overlap kernel <gamma | mu> between two cone bases at a shared rho (see :func:`transition_matrix`).

    ``grid`` is a section grid from :func:`build_section_grid`; its extent must
    cover the decay of both labels' angular factors.
    """
    return complex(transition_matrix([label_a], [label_b], surface, grid)[0, 0])


def transition_row_sum(label: SpectralLabel, target_chart, grid: QuadratureGrid, cap: int, label_max: float, n_label: int) -> float:
    """Sum over target labels of |<label | mu>|^2, continuous target labels on a Gauss rule.

    The target's Plancherel factor (besides the rho density) weights the
    continuous label, so unitarity of the change of basis makes this 1.
    """
    target = as_chart(target_chart)
    spec = TruncationSpec(cap=cap, label_max=label_max, n_label=n_label, label_max_ot=label_max, n_label_ot=n_label, n_circle=max(24, 2 * cap + 1))
    axes, weights = label_axes(target, spec)
    axes["rho"] = np.array([label.rho])
    weights["rho"] = np.ones(1)
    coeffs = CoefficientSet(target, axes, weights, np.zeros(tuple(v.size for v in axes.values())), spec)
    idx = [tuple(i) for i in np.argwhere(coeffs.mask)]
    targets = [coeffs.label_at(i) for i in idx]
    row = transition_matrix([label], targets, Surface.CONE, grid)[0]
    meas = coeffs.measure() / _spectral_density(label.rho)
    return float(sum(meas[i] * abs(t) ** 2 for i, t in zip(idx, row)))


def packet_transition(label_a: SpectralLabel, label_b: SpectralLabel, grid: QuadratureGrid, packet: WavePacket, n: int = 32) -> complex:
    """Packet-regularized overlap: <Phi_a[g], Phi_b[g]> over a full cone grid, divided by
    the continuum packet norm, with both labels' rho replaced by the packet window g."""
    if grid.surface is not Surface.CONE:
        raise TransformError("packet transitions are computed on a cone grid")
    pa = wave_packet(label_a, packet, Surface.CONE, n)
    pb = wave_packet(label_b, packet, Surface.CONE, n)
    return inner_product(pb, pa, grid) / packet_overlap(packet, packet)


# ---------------------------------------------------------------------------
# Gelfand-Graev transform and homogeneous components


def _rotation_to(u: np.ndarray) -> np.ndarray:
    """Proper rotation R of R^4 with R e4 = u / |u|."""
    u = u / np.linalg.norm(u)
    basis = [u]
    for e in np.eye(4)[np.argsort(np.abs(u))]:
        v = e - sum(np.dot(e, b) * b for b in basis)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == 4:
            break
    r = np.column_stack(basis[1:] + basis[:1])
    if np.linalg.det(r) < 0:
        r[:, 0] = -r[:, 0]
    return r


def _as_cone_vector(k) -> np.ndarray:
    if isinstance(k, HomogeneousPoint):
        if k.surface is not Surface.CONE:
            raise TransformError("k must lie on the cone")
        k = k.x
    k = np.asarray(k, dtype=float)
    if k.shape != (5,):
        raise TransformError("k needs five homogeneous coordinates")
    if k[0] <= 0:
        raise TransformError("k must have k0 > 0")
    if abs(k[0] ** 2 - np.sum(k[1:] ** 2)) > 1e-10 * k[0] ** 2:
        raise TransformError("k is not on the cone")
    return k


def _homogeneous_callable(psi):
    if isinstance(psi, ScalarField):
        chart = psi.chart
        if chart is None:
            raise TransformError("scalar field needs a chart to be evaluated at homogeneous points")

        def g(*x):
            p, eps, _ = inverse_map(chart, Surface.HYPERBOLOID, np.array(x))
            return psi(list(p), eps)

        return g
    return psi


def gg_transform(psi, k, n_r: int = 64, n_theta: int = 48, n_phi: int = 64, v_max: float = 10.0) -> complex:
    """h(k) = integral of psi(x) delta([x, k] - 1) d^4x / x0 over the orisphere [x, k] = 1.

    A rotation R of (x1, ..., x4) carries k0 = (t, 0, 0, 0, t) to k with t = k0.
    In the O chart [x, k0] = t e^a, so the orisphere is a = -log t, where
    d^4x/x0 restricted by the delta is e^{3a} r^2 sin(theta) dr dtheta dphi.
    With r = e^{-a/2} v the rule covers v in [0, v_max].  ``psi`` is a
    function of homogeneous coordinates or a chart-based ScalarField.
    """
    k = _as_cone_vector(k)
    t = k[0]
    rot = _rotation_to(k[1:])
    g = _homogeneous_callable(psi)
    a0 = -math.log(t)
    v, wv = gauss_rule(0.0, v_max, n_r)
    th, wt = gauss_rule(0.0, math.pi, n_theta)
    ph, wp = circle_rule(n_phi)
    vv, tt, pp = np.meshgrid(v, th, ph, indexing="ij")
    r = math.exp(-0.5 * a0) * vv
    x = np.array(chart_map(ChartId.O, Surface.HYPERBOLOID, (np.full_like(r, a0), r, tt, pp)))
    x[1:] = np.einsum("ij,j...->i...", rot, x[1:])
    vals = np.asarray(g(*x), dtype=complex)
    # e^{3 a0} r^2 dr with r = e^{-a0/2} v gives e^{3 a0 / 2} v^2 dv
    w = np.multiply.outer(np.multiply.outer(wv * v * v, wt), wp) * np.sin(tt) * math.exp(1.5 * a0)
    return complex(np.sum(w * vals))


def lorentz_boost(axis: int, rapidity: float) -> np.ndarray:
    """5x5 boost mixing x0 with x_axis (axis in 1..4)."""
    g = np.eye(5)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    g[0, 0] = g[axis, axis] = ch
    g[0, axis] = g[axis, 0] = sh
    return g


def random_group_element(rng: np.random.Generator, max_rapidity: float = 0.5) -> np.ndarray:
    """Random element of SO0(1,4): rotation, boost along x4, rotation."""
    def rot():
        q, rr = np.linalg.qr(rng.normal(size=(4, 4)))
        q = q * np.sign(np.diag(rr))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        g = np.eye(5)
        g[1:, 1:] = q
        return g

    return rot() @ lorentz_boost(4, rng.uniform(-max_rapidity, max_rapidity)) @ rot()


def translate(psi, g: np.ndarray):
    """The function x -> psi(g^{-1} x) of homogeneous coordinates."""
    f = _homogeneous_callable(psi)
    ginv = np.linalg.inv(g)

    def shifted(*x):
        y = np.einsum("ij,j...->i...", ginv, np.array(x))
        return f(*y)

    return shifted


def _tail_end(integrand, direction: int, s_max: float) -> float:
    """First s = direction * 2^n where the integrand has dropped below 1e-14 of its size near 0."""
    scale = max(abs(integrand(0.0)), abs(integrand(direction * 1.0)), 1e-300)
    s = 1.0
    while s <= s_max:
        try:
            tail = abs(integrand(direction * s))
        except (OverflowError, FloatingPointError):
            tail = math.inf
        if not math.isfinite(tail):
            break
        if tail < 1e-14 * scale:
            return direction * s
        s *= 2.0
    raise TransformError(f"integrand does not decay toward s = {direction * s_max:g}; sigma is outside the convergence strip")


def homogeneous_component(h, sigma: complex, kdir, s_max: float = 8192.0) -> complex:
    """Psi(k, sigma) = integral over t > 0 of h(t k) t^{-sigma-1} dt, via t = e^s.

    ``h`` takes homogeneous coordinates (x0, ..., x4).  Each end of the
    s-line is cut where the integrand has decayed by 14 orders; TransformError
    is raised when that does not happen within |s| <= s_max or the adaptive
    rule does not converge.
    """
    k = _as_cone_vector(kdir)
    sigma = complex(sigma)

    def integrand(s):
        with np.errstate(over="raise", invalid="raise"):
            return complex(h(*(math.exp(s) * k))) * np.exp(-sigma * s)

    lo, hi = _tail_end(integrand, -1, s_max), _tail_end(integrand, 1, s_max)
    # segments about one period of e^{-i Im(sigma) s} long keep each quad call non-oscillatory
    step = min(2.0, math.pi / max(abs(sigma.imag), 1e-3))
    cuts = np.unique(np.concatenate([np.arange(0.0, lo, -step), np.arange(0.0, hi, step), [lo, hi]]))
    size = max(abs(integrand(c)) for c in cuts)
    tol = 1e-14 * max(size, 1e-300)
    total = 0j
    for a, b in zip(cuts[:-1], cuts[1:]):
        for part, unit in ((lambda s: integrand(s).real, 1.0), (lambda s: integrand(s).imag, 1j)):
            out = integrate.quad(part, a, b, limit=200, epsabs=tol, epsrel=1e-12, full_output=1)
            # status 2 means the rule hit double-precision roundoff, which is harmless when err stays tiny
            if len(out) == 4 and ("occurrence of roundoff" not in out[3] or out[1] > 1e-9 * size):
                raise TransformError(f"adaptive quadrature did not converge on [{a:g}, {b:g}]: {out[3]}")
            total += unit * out[0]
    return complex(total)

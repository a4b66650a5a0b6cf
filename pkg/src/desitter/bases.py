"""Eigenfunction families of the invariant Laplacian on H4+ and on C4+.

Hyperboloid families are normalized so that

    <Phi', Phi> = delta(rho - rho') / (rho (rho^2 + 1/4) tanh(pi rho)) * (label deltas),

with the extra continuous-label weights returned by :func:`plancherel_weight`.
Cone families are (C+ e^{(-3/2 + i rho) a} + C- e^{(-3/2 - i rho) a}) times
an angular factor.  Every evaluator is written with numpy ufuncs and the
jet-aware kernels of :mod:`desitter.specfn`, so it accepts jets as well as
arrays of chart parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from .charts import ChartId, ChartPoint, Surface, as_chart, as_surface
from .generators import ScalarField
from .jets import Jet
from .specfn import (
    bessel_j,
    gamma_complex,
    gauss_2f1,
    legendre_p,
    loggamma,
    macdonald_k_imag,
    macdonald_k_table,
    sph_harm,
    sph_harm_3,
)

RHO_MIN = 1e-3
SQRT_PI = math.sqrt(math.pi)


class BasisError(ValueError):
    pass


class BasisSide(str, Enum):
    HYPERBOLOID_NORMED = "HyperboloidNormed"
    CONE_DELTA_NORMED = "ConeDeltaNormed"


class Branch(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    BOTH = "both"


_FIELDS = {
    ChartId.S: ("j", "l", "m"),
    ChartId.H: ("nu", "l", "m", "eps"),
    ChartId.O: ("kappa", "l", "m"),
    ChartId.OC: ("eta", "q", "m"),
    ChartId.OT: ("kvec",),
    ChartId.C: ("tau", "l", "m"),
    ChartId.SH: ("omega", "mprime", "m"),
}


@dataclass(frozen=True)
class SpectralLabel:
    """Continuous label rho plus the chart-specific subgroup labels."""

    chart: ChartId
    rho: float
    j: int | None = None
    l: int | None = None  # noqa: E741
    m: int | None = None
    nu: float | None = None
    eps: int | None = None
    kappa: float | None = None
    eta: float | None = None
    q: float | None = None
    kvec: tuple[float, float, float] | None = None
    tau: float | None = None
    omega: float | None = None
    mprime: int | None = None

    def __post_init__(self):
        chart = as_chart(self.chart)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "rho", float(self.rho))
        if not math.isfinite(self.rho) or self.rho < 0:
            raise BasisError("rho must be a finite real >= 0")
        needed = _FIELDS[chart]
        for f in fields(self):
            if f.name in ("chart", "rho"):
                continue
            val = getattr(self, f.name)
            if f.name in needed and val is None:
                if f.name == "eps":
                    object.__setattr__(self, "eps", 1)
                    continue
                raise BasisError(f"label for chart {chart.value} needs field {f.name!r}")
            if f.name not in needed and val is not None:
                raise BasisError(f"field {f.name!r} does not belong to chart {chart.value}")
        for name in ("j", "l", "m", "mprime", "eps"):
            val = getattr(self, name)
            if val is not None:
                if float(val) != int(val):
                    raise BasisError(f"{name} must be an integer")
                object.__setattr__(self, name, int(val))
        for name in ("nu", "kappa", "eta", "q", "tau", "omega"):
            val = getattr(self, name)
            if val is not None:
                if not math.isfinite(float(val)):
                    raise BasisError(f"{name} must be finite")
                object.__setattr__(self, name, float(val))
        if self.kvec is not None:
            kv = tuple(float(v) for v in self.kvec)
            if len(kv) != 3:
                raise BasisError("kvec needs three components")
            object.__setattr__(self, "kvec", kv)
        self._check_bounds()

    def _check_bounds(self):
        c = self.chart
        if c is ChartId.S and not (0 <= self.l <= self.j and abs(self.m) <= self.l):
            raise BasisError("S labels need 0 <= l <= j and |m| <= l")
        if c in (ChartId.H, ChartId.O, ChartId.C) and not (self.l >= 0 and abs(self.m) <= self.l):
            raise BasisError("labels need l >= 0 and |m| <= l")
        if c is ChartId.H:
            if self.nu <= 0:
                raise BasisError("nu must be > 0")
            if self.eps not in (1, -1):
                raise BasisError("eps must be +1 or -1")
        if c is ChartId.O and self.kappa <= 0:
            raise BasisError("kappa must be > 0")
        if c is ChartId.OC and (self.eta < 0 or self.eta**2 + self.q**2 == 0):
            raise BasisError("OC labels need eta >= 0 and eta^2 + q^2 > 0")
        if c is ChartId.OT and self.kappa_norm == 0:
            raise BasisError("kvec must be nonzero")
        if c is ChartId.SH and self.omega < 0:
            raise BasisError("omega must be >= 0")

    @property
    def sigma(self) -> complex:
        return complex(-1.5, self.rho)

    @property
    def kappa_norm(self) -> float:
        """|kappa| for the O-type charts (kappa, sqrt(eta^2+q^2), |kvec|)."""
        if self.chart is ChartId.O:
            return self.kappa
        if self.chart is ChartId.OC:
            return math.hypot(self.eta, self.q)
        if self.chart is ChartId.OT:
            return math.sqrt(sum(v * v for v in self.kvec))
        raise BasisError(f"chart {self.chart.value} has no kappa")

    def replace(self, **kw) -> SpectralLabel:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return SpectralLabel(**d)

    def to_dict(self) -> dict:
        d = {"chart": self.chart.value, "rho": self.rho}
        for name in _FIELDS[self.chart]:
            v = getattr(self, name)
            d[name] = list(v) if isinstance(v, tuple) else v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SpectralLabel:
        d = dict(d)
        try:
            chart = d.pop("chart")
            rho = d.pop("rho")
        except KeyError as exc:
            raise BasisError(f"label is missing field {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise BasisError(f"unknown label fields {sorted(unknown)}")
        if "kvec" in d and d["kvec"] is not None:
            d["kvec"] = tuple(d["kvec"])
        return cls(chart, rho, **d)

    @classmethod
    def from_json(cls, text: str) -> SpectralLabel:
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# gamma helpers


def log_abs_gamma(z) -> float:
    return float(np.real(loggamma(complex(z))))


def abs_gamma_ratio(num, den) -> float:
    """prod |Gamma(num_i)| / prod |Gamma(den_i)|, computed in logs."""
    return math.exp(sum(log_abs_gamma(z) for z in num) - sum(log_abs_gamma(z) for z in den))


def _gamma(z) -> complex:
    return complex(gamma_complex(complex(z)))


def plancherel_weight(label: SpectralLabel) -> float:
    """Spectral density rho (rho^2 + 1/4) tanh(pi rho) times the extra label weight."""
    rho = label.rho
    w = rho * (rho * rho + 0.25) * math.tanh(math.pi * rho)
    c = label.chart
    if c is ChartId.H:
        w *= label.nu**2
    elif c is ChartId.O:
        w *= label.kappa**2
    elif c is ChartId.OC:
        w *= label.eta
    elif c is ChartId.SH:
        w *= label.omega * math.tanh(math.pi * label.omega)
    return w


# ---------------------------------------------------------------------------
# factors along single coordinates
#
# Label arguments broadcast as numpy arrays, so the transforms can build
# tables from the same code; coordinates may be arrays or jets.


def _lag(z):
    """log|Gamma(z)| elementwise."""
    return np.real(loggamma(np.asarray(z, dtype=complex)))


def s_radial(rho, j, a):
    """|Gamma(i rho - 1/2)| / |Gamma(i rho - j - 1/2)| sinh^{-1} a P^{-j-1}_{i rho - 1/2}(cosh a)."""
    rho, j = np.asarray(rho, dtype=float), np.asarray(j)
    pref = np.exp(_lag(-0.5 + 1j * rho) - _lag(-j - 0.5 + 1j * rho))
    return pref * (legendre_p(-j - 1, -0.5 + 1j * rho, np.cosh(a)) / np.sinh(a)).real


def h_radial(rho, nu, eps, a):
    """|Gamma(i rho + i nu + 1/2) Gamma(i rho - i nu + 1/2)| / (sqrt(2 pi) |Gamma(i rho + 3/2)|)
    (cosh a)^{-3/2} P^{-i rho}_{i nu - 1/2}(eps tanh a)."""
    rho, nu = np.asarray(rho, dtype=float), np.asarray(nu, dtype=float)
    pref = np.exp(_lag(0.5 + 1j * (rho + nu)) + _lag(0.5 + 1j * (rho - nu)) - _lag(1.5 + 1j * rho)) / math.sqrt(2.0 * math.pi)
    return pref * np.cosh(a) ** (-1.5) * legendre_p(-1j * rho, -0.5 + 1j * nu, eps * np.tanh(a))


def h_transverse(nu, l, b):
    """|Gamma(i nu)| / |Gamma(i nu - l)| (sinh b)^{-1/2} P^{-l-1/2}_{i nu - 1/2}(cosh b), real."""
    nu, l = np.asarray(nu, dtype=float), np.asarray(l)
    pref = np.exp(_lag(1j * nu) - _lag(-l + 1j * nu))
    return pref * (legendre_p(-l - 0.5, -0.5 + 1j * nu, np.cosh(b)) * np.sinh(b) ** (-0.5)).real


def o_scale(rho) -> np.ndarray:
    return np.exp(-_lag(1.5 + 1j * np.asarray(rho, dtype=float)))


def o_radial(rho: float, kappa: float, a):
    """e^{-3a/2} K_{i rho}(kappa e^{-a}) / |Gamma(i rho + 3/2)| for scalar labels."""
    return o_scale(rho) * np.exp(-1.5 * a) * macdonald_k_imag(rho, kappa * np.exp(-a))


def o_radial_table(rhos, kappas, a) -> np.ndarray:
    """o_radial on the grid (a, rho, kappa), shape (len a, len rhos, len kappas)."""
    rhos, kappas, a = (np.asarray(v, dtype=float).ravel() for v in (rhos, kappas, a))
    xs = np.exp(-a)[:, None] * kappas[None, :]
    k = macdonald_k_table(rhos, xs.ravel()).reshape(a.size, kappas.size, rhos.size)
    return np.transpose(k, (0, 2, 1)) * (o_scale(rhos)[None, :, None] * np.exp(-1.5 * a)[:, None, None])


def c_radial(rho, tau, l, a):
    """(1/2pi) |Gamma(alpha) Gamma(beta)| / (|Gamma(i rho + 3/2)| Gamma(l + 3/2))
    (cosh a)^{-3/2 - i rho} tanh^l a 2F1(alpha, beta; l + 3/2; tanh^2 a)."""
    rho, tau, l = np.asarray(rho, dtype=float), np.asarray(tau, dtype=float), np.asarray(l)
    al = (l + 1.5 + 1j * (rho + tau)) / 2.0
    be = (l + 1.5 + 1j * (rho - tau)) / 2.0
    log_pref = _lag(al) + _lag(be) - _lag(1.5 + 1j * rho) - _lag(l + 1.5) - math.log(2.0 * math.pi)
    t = np.tanh(a)
    return np.exp(log_pref) * np.cosh(a) ** (-1.5 - 1j * rho) * t**l * gauss_2f1(al, be, l + 1.5, t * t)


def sh_radial(rho, omega, mt, a):
    """(2pi)^{-3/2} |Gamma(alpha) Gamma(beta)| / (Gamma(mt + 1) |Gamma(i rho + 3/2)|)
    tanh^mt a (cosh a)^{-3/2 - i rho} 2F1(alpha, beta; mt + 1; tanh^2 a), with mt = |m'|."""
    rho, omega, mt = np.asarray(rho, dtype=float), np.asarray(omega, dtype=float), np.abs(np.asarray(mt))
    al = (mt + 1.0 + 1j * (rho + omega)) / 2.0
    be = (mt + 1.0 + 1j * (rho - omega)) / 2.0
    log_pref = _lag(al) + _lag(be) - _lag(mt + 1.0) - _lag(1.5 + 1j * rho) - 1.5 * math.log(2.0 * math.pi)
    t = np.tanh(a)
    return np.exp(log_pref) * np.cosh(a) ** (-1.5 - 1j * rho) * t**mt * gauss_2f1(al, be, mt + 1.0, t * t)


def sh_transverse(omega, m, b):
    """|Gamma(i w + 1/2)| / |Gamma(i w + m + 1/2)| P^m_{i w - 1/2}(cosh b), real."""
    omega, m = np.asarray(omega, dtype=float), np.asarray(m)
    pref = np.exp(_lag(0.5 + 1j * omega) - _lag(m + 0.5 + 1j * omega))
    return pref * legendre_p(m, -0.5 + 1j * omega, np.cosh(b)).real


def bessel_int_order(m: int, x):
    """J_m(x) for any integer m via J_{-m} = (-1)^m J_m."""
    val = bessel_j(abs(m), x)
    return val * (-1.0) ** m if m < 0 else val


def spherical_bessel_factor(l: int, kr):
    """(kr)^{-1/2} J_{l+1/2}(kr)."""
    return bessel_j(l + 0.5, kr) * kr ** (-0.5)


O_CONST = {ChartId.O: math.sqrt(2.0 / math.pi), ChartId.OC: 1.0 / (math.pi * math.sqrt(2.0 * math.pi)), ChartId.OT: 1.0 / (2.0 * math.pi**2)}


def _o_type_angular(label: SpectralLabel, p1, p2, p3):
    c = label.chart
    if c is ChartId.O:
        return spherical_bessel_factor(label.l, label.kappa * p1) * sph_harm(label.l, label.m, p2, p3)
    if c is ChartId.OC:
        xi, z, phi = p1, p2, p3
        return bessel_int_order(label.m, label.eta * xi) * np.exp(1j * (label.q * z + label.m * phi))
    k1, k2, k3 = label.kvec
    return np.exp(1j * (k1 * p1 + k2 * p2 + k3 * p3))


# ---------------------------------------------------------------------------
# hyperboloid families


def h4_values(label: SpectralLabel, params):
    """Normalized hyperboloid basis function at chart parameters (arrays or jets)."""
    a, p1, p2, p3 = params
    rho = label.rho
    c = label.chart
    if c is ChartId.S:
        return s_radial(rho, label.j, a) * sph_harm_3(label.j, label.l, label.m, p1, p2, p3)
    if c is ChartId.H:
        return h_radial(rho, label.nu, label.eps, a) * h_transverse(label.nu, label.l, p1) * sph_harm(label.l, label.m, p2, p3)
    if c in (ChartId.O, ChartId.OC, ChartId.OT):
        return O_CONST[c] * o_radial(rho, label.kappa_norm, a) * _o_type_angular(label, p1, p2, p3)
    if c is ChartId.C:
        return c_radial(rho, label.tau, label.l, a) * np.exp(1j * label.tau * p1) * sph_harm(label.l, label.m, p2, p3)
    if c is ChartId.SH:
        rad = sh_radial(rho, label.omega, label.mprime, a)
        return rad * sh_transverse(label.omega, label.m, p1) * np.exp(1j * (label.m * p2 + label.mprime * p3))
    raise BasisError(f"unsupported chart {c}")


# ---------------------------------------------------------------------------
# cone families


def cone_coefficients(label: SpectralLabel) -> tuple[complex, complex]:
    """(C+, C-) multiplying e^{(-3/2 + i rho) a} and e^{(-3/2 - i rho) a}."""
    rho = label.rho
    if rho < RHO_MIN:
        raise BasisError(f"cone families need rho >= {RHO_MIN} (Gamma(i rho) has a pole at 0)")
    c = label.chart
    inv_g32 = 1.0 / abs_gamma_ratio([complex(1.5, rho)], [])
    if c is ChartId.S:
        j = label.j
        k = math.sqrt(2.0 / math.pi) * abs_gamma_ratio([complex(j + 1.5, rho)], []) * inv_g32
        return tuple(k * _gamma(s * 1j * rho) / _gamma(complex(j + 1.5, s * rho)) for s in (1, -1))
    if c is ChartId.H:
        nu = label.nu
        g_p, g_m = _gamma(complex(0.5, rho + nu)), _gamma(complex(0.5, rho - nu))
        log_k = 0.5 * math.log(2.0 / math.pi) + log_abs_gamma(complex(0.5, rho + nu)) + log_abs_gamma(complex(0.5, rho - nu)) - log_abs_gamma(complex(1.5, rho))
        k = math.exp(log_k)
        c_plus = k * _gamma(1j * rho) / (g_p * g_m)
        log_cosh = math.pi * nu + math.log1p(math.exp(-2.0 * math.pi * nu)) - math.log(2.0)
        c_minus = math.exp(log_k + log_cosh) / math.pi * _gamma(-1j * rho) + label.eps * k / _gamma(complex(1.0, rho))
        return c_plus, c_minus
    if c in (ChartId.O, ChartId.OC, ChartId.OT):
        kappa = label.kappa_norm
        base = inv_g32 / (2.0 * SQRT_PI)
        return tuple(base * (kappa / 2.0) ** (-s * 1j * rho) * _gamma(s * 1j * rho) for s in (1, -1))
    if c in (ChartId.C, ChartId.SH):
        if c is ChartId.C:
            shift, w = label.l + 1.5, label.tau
        else:
            shift, w = abs(label.mprime) + 1.0, label.omega
        num = abs_gamma_ratio([complex(shift, rho + w) / 2.0, complex(shift, rho - w) / 2.0], [])
        k = math.sqrt(2.0 / math.pi) * num * inv_g32
        out = []
        for s in (1, -1):
            den = _gamma(complex(shift, s * rho + w) / 2.0) * _gamma(complex(shift, s * rho - w) / 2.0)
            out.append(k * 2.0 ** (-s * 1j * rho) * _gamma(s * 1j * rho) / den)
        return tuple(out)
    raise BasisError(f"unsupported chart {c}")


def cone_angular(label: SpectralLabel, p1, p2, p3):
    c = label.chart
    if c is ChartId.S:
        return sph_harm_3(label.j, label.l, label.m, p1, p2, p3)
    if c is ChartId.H:
        return h_transverse(label.nu, label.l, p1) * sph_harm(label.l, label.m, p2, p3)
    if c is ChartId.O:
        return _o_type_angular(label, p1, p2, p3)
    if c is ChartId.OC:
        return _o_type_angular(label, p1, p2, p3) / (2.0 * math.pi)
    if c is ChartId.OT:
        return _o_type_angular(label, p1, p2, p3) / (2.0 * math.pi) ** 1.5
    if c is ChartId.C:
        return np.exp(1j * label.tau * p1) * sph_harm(label.l, label.m, p2, p3) / math.sqrt(2.0 * math.pi)
    if c is ChartId.SH:
        return sh_transverse(label.omega, label.m, p1) * np.exp(1j * (label.m * p2 + label.mprime * p3)) / (2.0 * math.pi)
    raise BasisError(f"unsupported chart {c}")


def c4_values(label: SpectralLabel, params, eps=None, branch: Branch | str = Branch.BOTH):
    """Cone basis function at chart parameters (arrays or jets)."""
    a, p1, p2, p3 = params
    branch = Branch(branch)
    c_plus, c_minus = cone_coefficients(label)
    rad = 0.0
    if branch in (Branch.PLUS, Branch.BOTH):
        rad = rad + c_plus * np.exp(a * complex(-1.5, label.rho))
    if branch in (Branch.MINUS, Branch.BOTH):
        rad = rad + c_minus * np.exp(a * complex(-1.5, -label.rho))
    out = rad * cone_angular(label, p1, p2, p3)
    if label.chart is ChartId.H:
        sheet = np.ones(np.shape(_value(a))) if eps is None else np.asarray(eps, dtype=float)
        out = out * (sheet == label.eps)
    return out


def _value(x):
    return x.value if isinstance(x, Jet) else x


# ---------------------------------------------------------------------------
# public evaluators


def _point_args(label: SpectralLabel, p, surface: Surface):
    if isinstance(p, ChartPoint):
        if p.chart is not label.chart:
            raise BasisError(f"point chart {p.chart.value} does not match label chart {label.chart.value}")
        if p.surface is not surface:
            raise BasisError(f"point lies on the {p.surface.value}, expected the {surface.value}")
        if p.degenerate:
            raise BasisError("point is degenerate")
        return [np.float64(v) for v in p.params], p.eps
    return p, None


def basis_h4(label: SpectralLabel, p):
    """Normalized hyperboloid basis function at a chart point (or parameter arrays)."""
    params, _ = _point_args(label, p, Surface.HYPERBOLOID)
    val = h4_values(label, params)
    return complex(val) if np.ndim(val) == 0 and not isinstance(val, Jet) else val


def basis_c4(label: SpectralLabel, p, branch: Branch | str = Branch.BOTH, eps=None):
    """Delta-normed cone basis function; ``branch`` selects one exponential or both."""
    params, point_eps = _point_args(label, p, Surface.CONE)
    val = c4_values(label, params, point_eps if point_eps is not None else eps, branch)
    return complex(val) if np.ndim(val) == 0 and not isinstance(val, Jet) else val


def basis_field(label: SpectralLabel, surface, branch: Branch | str = Branch.BOTH) -> ScalarField:
    """The basis function as a jet-capable field for the generator machinery."""
    surface = as_surface(surface)
    if surface is Surface.HYPERBOLOID:
        return ScalarField(lambda params, eps=None: h4_values(label, params), label.chart, surface, "basis_h4")
    return ScalarField(lambda params, eps=None: c4_values(label, params, eps, branch), label.chart, surface, "basis_c4")


def eigenvalues(label: SpectralLabel) -> dict[str, complex]:
    """Expected eigenvalues: 'F' for the Casimir and one entry per subgroup invariant."""
    c = label.chart
    ev: dict[str, complex] = {"F": label.rho**2 + 2.25}
    if c is ChartId.S:
        ev.update(J2=label.j * (label.j + 2), M2=label.l * (label.l + 1), M3=label.m)
    elif c is ChartId.H:
        ev.update(NM2=label.nu**2 + 1.0, M2=label.l * (label.l + 1), M3=label.m)
    elif c is ChartId.O:
        ev.update(E2=label.kappa**2, M2=label.l * (label.l + 1), M3=label.m)
    elif c is ChartId.OC:
        ev.update(E2=label.eta**2 + label.q**2, Etilde2=label.eta**2, E3=label.q, M3=label.m)
    elif c is ChartId.OT:
        ev.update(E2=label.kappa_norm**2, Ey1=label.kvec[0], Ey2=label.kvec[1], Ey3=label.kvec[2])
    elif c is ChartId.C:
        ev.update(M2=label.l * (label.l + 1), M3=label.m, P0=label.tau)
    elif c is ChartId.SH:
        ev.update(H2=-(label.omega**2 + 0.25), M3=label.m, P3=label.mprime)
    return ev


def _s_radial_pair(label: SpectralLabel, a):
    """Hyperboloid S radial factor and sqrt(2) times its cone counterpart (arrays or jets)."""
    rho, j = label.rho, label.j
    hyp = s_radial(rho, j, a)
    c_plus, c_minus = cone_coefficients(label)
    cone = math.sqrt(2.0) * (c_plus * np.exp(a * complex(-1.5, rho)) + c_minus * np.exp(a * complex(-1.5, -rho)))
    return hyp, cone


def _check_match_args(label: SpectralLabel, a: float) -> None:
    if label.chart is not ChartId.S:
        raise BasisError("cone matching is defined for the S family")
    if not a >= 5:
        raise BasisError("cone matching needs a >= 5")


def cone_limit_match(label: SpectralLabel, a: float) -> tuple[complex, complex]:
    """Radial profiles of the S family on H4+ and on the cone at large ``a``.

    The hyperboloid side is
    |Gamma(i rho - 1/2)| / |Gamma(i rho - j - 1/2)| sinh^{-1} a P^{-j-1}_{i rho - 1/2}(cosh a);
    the cone side is sqrt(2) (C+ e^{(-3/2 + i rho) a} + C- e^{(-3/2 - i rho) a}).
    The sqrt(2) converts the cone's delta normalization over the full line
    in ``a`` to the hyperboloid's half line.  The common angular factor
    Y_jlm is left out.
    """
    _check_match_args(label, a)
    hyp, cone = _s_radial_pair(label, float(a))
    return complex(hyp), complex(cone)


def cone_match_residual(label: SpectralLabel, a: float) -> float:
    """Relative size of the mismatch between the two profiles of :func:`cone_limit_match`.

    The mismatch e(a) behaves like e^{-7a/2} (D e^{i rho a} + conj), so its
    pointwise value passes through zeros.  We measure its amplitude
    sqrt(e^2 + ((e' + 7e/2) / rho)^2), which is free of those zeros, and divide
    by the envelope sqrt(2) (|C+| + |C-|) e^{-3a/2} of the profile.
    """
    _check_match_args(label, a)
    a_jet = Jet.variables(np.array([float(a), 0.0, 0.0, 0.0]), 1)[0]
    hyp, cone = _s_radial_pair(label, a_jet)
    err = (hyp - cone).real
    e, de = float(err.value), float(err.grad(0))
    amp = math.hypot(e, (de + 3.5 * e) / label.rho)
    c_plus, c_minus = cone_coefficients(label)
    envelope = math.sqrt(2.0) * (abs(c_plus) + abs(c_minus)) * math.exp(-1.5 * a)
    return amp / envelope

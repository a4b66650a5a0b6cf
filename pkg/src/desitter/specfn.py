"""Special-function kernels: gamma, Gauss 2F1, Legendre, Bessel J, K_{i rho}.

Every kernel is vectorized over its real argument.  Passing a :class:`Jet` as
the argument returns the composed jet; derivatives beyond the first are
generated from the defining second-order ODE, so only the value and first
derivative are ever evaluated directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .jets import Jet

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AccuracyReport:
    """Value together with the evaluator's claimed absolute error bound."""

    value: complex
    est_abs_err: float


class SpecialFunctionError(ValueError):
    """Raised for arguments outside a kernel's domain."""


def _as_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise SpecialFunctionError("non-finite parameter")
    return z


def _is_pole(z: np.ndarray) -> np.ndarray:
    return (np.abs(z.imag) < 1e-14) & (z.real <= 0.5) & (np.abs(z.real - np.round(z.real)) < 1e-14)


def _lanczos_log(z: np.ndarray) -> np.ndarray:
    """log Gamma(z) for Re z >= 1/2."""
    z = z - 1.0
    acc = np.full_like(z, _LANCZOS_P[0])
    for i, p in enumerate(_LANCZOS_P[1:], start=1):
        acc = acc + p / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """log sin(pi z), stable for large |Im z|."""
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    val = -1j * np.pi * w + np.log(1.0 - np.exp(2j * np.pi * w)) + np.log(0.5j)
    return np.where(flip, np.conj(val), val)


def loggamma(z) -> np.ndarray:
    """log Gamma(z) (some branch); the real part is log|Gamma(z)|."""
    z = _as_complex(z)
    if np.any(_is_pole(z)):
        raise SpecialFunctionError("Gamma has a pole at a nonpositive integer")
    left = z.real < 0.5
    zr = np.where(left, 1.0 - z, z)
    base = _lanczos_log(zr)
    with np.errstate(all="ignore"):
        refl = math.log(math.pi) - _log_sin_pi(np.where(left, z, 0.5)) - base
    return np.where(left, refl, base)


def gamma_complex(z) -> np.ndarray | complex:
    """Gamma function of a complex argument.

    Lanczos approximation on Re z >= 1/2 and the reflection formula
    elsewhere.  Raises :class:`SpecialFunctionError` at the poles.
    """
    zc = _as_complex(z)
    if np.any(_is_pole(zc)):
        raise SpecialFunctionError("Gamma has a pole at a nonpositive integer")
    left = zc.real < 0.5
    zr = np.where(left, 1.0 - zc, zc)
    zz = zr - 1.0
    acc = np.full_like(zz, _LANCZOS_P[0])
    for i, p in enumerate(_LANCZOS_P[1:], start=1):
        acc = acc + p / (zz + i)
    t = zz + _LANCZOS_G + 0.5
    direct = np.exp(_HALF_LOG_2PI + (zz + 0.5) * np.log(t) - t) * acc
    with np.errstate(all="ignore"):
        refl = np.pi / (np.sin(np.pi * zc) * direct)
    out = np.where(left, refl, direct)
    return complex(out) if out.ndim == 0 else out


def rgamma(z) -> np.ndarray:
    """1/Gamma(z), equal to zero at the poles of Gamma."""
    z = _as_complex(z)
    pole = _is_pole(z)
    safe = np.where(pole, 1.0, z)
    return np.where(pole, 0.0, np.exp(-loggamma(safe)))


def abs_gamma(z) -> np.ndarray:
    """|Gamma(z)| computed through log-gamma (no overflow for large |Im z|)."""
    return np.exp(loggamma(z).real)


# ---------------------------------------------------------------------------
# Taylor coefficients from a second-order ODE  A y'' + B y' + C y = 0


def ode_derivatives(y0, y1, A, B, C, n: int) -> list:
    """Derivatives ``y, y', ..., y^(n)`` from the ODE with polynomial data.

    ``A``, ``B`` and ``C`` are lists of the successive derivatives of the
    coefficient functions at the expansion point (missing entries are zero).
    """
    ys = [np.asarray(y0), np.asarray(y1)]

    def coef(lst, j):
        return lst[j] if j < len(lst) else 0.0

    for k in range(0, n - 1):
        acc = 0.0
        for j in range(0, k + 1):
            w = comb(k, j)
            if j >= 1:
                acc = acc + w * coef(A, j) * ys[k + 2 - j]
            acc = acc + w * (coef(B, j) * ys[k + 1 - j] + coef(C, j) * ys[k - j])
        ys.append(-acc / A[0])
    return ys[: n + 1]


# ---------------------------------------------------------------------------
# Gauss hypergeometric function


def _series_2f1(a, b, c, z, tol=1e-17, kmax=3000):
    term = np.ones(np.broadcast(a, b, c, z).shape, dtype=complex)
    total = term.copy()
    abs_total = np.abs(term)
    for k in range(kmax):
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        term = term * ratio
        total = total + term
        mag = np.abs(term)
        abs_total = abs_total + mag
        if k > 2 and np.all((mag <= tol * np.maximum(np.abs(total), 1e-300)) & (np.abs(ratio) < 0.95)):
            break
    else:
        raise SpecialFunctionError("2F1 series did not converge")
    err = 4e-16 * abs_total + np.abs(term)
    return total, err


def _near_integer(d: np.ndarray, tol: float) -> np.ndarray:
    return (np.abs(d.imag) < tol) & (np.abs(d.real - np.round(d.real)) < tol)


def _one_minus_z(a, b, c, z):
    d = c - a - b
    w = 1.0 - z
    gc = gamma_complex(c)
    f1, e1 = _series_2f1(a, b, 1.0 - d, w)
    f2, e2 = _series_2f1(c - a, c - b, 1.0 + d, w)
    k1 = gc * gamma_complex(d) * rgamma(c - a) * rgamma(c - b)
    k2 = gc * gamma_complex(-d) * rgamma(a) * rgamma(b) * w**d
    return k1 * f1 + k2 * f2, np.abs(k1) * e1 + np.abs(k2) * e2


def _hyp2f1(a, b, c, z):
    a, b, c = (np.asarray(v, dtype=complex) for v in (a, b, c))
    z = np.asarray(z, dtype=float)
    a, b, c, z = np.broadcast_arrays(a, b, c, z)
    val = np.empty(z.shape, dtype=complex)
    err = np.empty(z.shape, dtype=float)
    small = np.abs(z) <= 0.5
    if np.any(small):
        v, e = _series_2f1(a[small], b[small], c[small], z[small])
        val[small], err[small] = v, e
    upper = z > 0.5
    if np.any(upper):
        au, bu, cu, zu = a[upper], b[upper], c[upper], z[upper]
        degenerate = _near_integer(cu - au - bu, 2e-5)
        v = np.empty(zu.shape, dtype=complex)
        e = np.empty(zu.shape, dtype=float)
        ok = ~degenerate
        if np.any(ok):
            v[ok], e[ok] = _one_minus_z(au[ok], bu[ok], cu[ok], zu[ok])
        if np.any(degenerate):
            # c - a - b at an integer: Richardson-combine nearby regular values
            ad, bd, cd, zd = au[degenerate], bu[degenerate], cu[degenerate], zu[degenerate]
            delta = 4e-5
            vals = {}
            errs = 0.0
            for s in (-2, -1, 1, 2):
                vals[s], es = _one_minus_z(ad, bd, cd + s * delta, zd)
                errs = errs + es
            v[degenerate] = (4.0 * (vals[1] + vals[-1]) - (vals[2] + vals[-2])) / 6.0
            e[degenerate] = errs + 1e-12 * np.abs(v[degenerate])
        val[upper], err[upper] = v, e
    lower = z < -0.5
    if np.any(lower):
        al, bl, cl, zl = a[lower], b[lower], c[lower], z[lower]
        w = zl / (zl - 1.0)
        v, e = _hyp2f1(al, cl - bl, cl, w)
        fac = (1.0 - zl) ** (-al)
        val[lower], err[lower] = fac * v, np.abs(fac) * e
    return val, err


def gauss_2f1(a, b, c, z, report: bool = False):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    Direct series for |z| <= 1/2, the 1 - z connection formula on
    (1/2, 1), and Pfaff's transformation for z < -1/2.
    """
    if isinstance(z, Jet):
        return z.compose(gauss_2f1_derivatives(a, b, c, z.value, z.order))
    cc = _as_complex(c)
    if np.any(_is_pole(cc)):
        raise SpecialFunctionError("2F1 parameter c is a nonpositive integer")
    zz = np.asarray(z, dtype=float)
    if np.any(zz >= 1.0) or not np.all(np.isfinite(zz)):
        raise SpecialFunctionError("2F1 argument must be real and below 1")
    val, err = _hyp2f1(a, b, cc, zz)
    if report:
        if val.ndim == 0:
            return AccuracyReport(complex(val), float(err))
        return [AccuracyReport(complex(v), float(e)) for v, e in zip(val.ravel(), err.ravel())]
    return complex(val) if val.ndim == 0 else val


def gauss_2f1_derivatives(a, b, c, z, n: int) -> list:
    a, b, c = (np.asarray(v, dtype=complex) for v in (a, b, c))
    z = np.asarray(z, dtype=float)
    f0 = gauss_2f1(a, b, c, z)
    if n == 0:
        return [f0]
    f1 = a * b / c * np.asarray(gauss_2f1(a + 1, b + 1, c + 1, z))
    A = [z - z * z, 1.0 - 2.0 * z, -2.0]
    B = [c - (a + b + 1.0) * z, -(a + b + 1.0)]
    C = [-a * b]
    return ode_derivatives(f0, f1, A, B, C, n)


# ---------------------------------------------------------------------------
# Legendre functions


def _positive_integer(mu: np.ndarray) -> np.ndarray:
    return (np.abs(mu.imag) < 1e-14) & (mu.real > 0.5) & (np.abs(mu.real - np.round(mu.real)) < 1e-14)


def _legendre_core(mu, nu, x, with_derivative: bool):
    """P^mu_nu and optionally its derivative; requires 1 - mu off the poles."""
    one_minus = np.where(np.abs(x) < 1.0, 1.0 - x, x - 1.0)
    ratio = (1.0 + x) / one_minus
    z = (1.0 - x) / 2.0
    a, b, c = -nu, nu + 1.0, 1.0 - mu
    rg = rgamma(c)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(mu == 0, 1.0 + 0j, ratio ** (mu / 2.0))
    f, ferr = _hyp2f1(a, b, c, z)
    val = g * rg * f
    err = np.abs(g * rg) * ferr
    if not with_derivative:
        return val, err, None
    fp, _ = _hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)
    dval = mu / (1.0 - x * x) * val - 0.5 * g * a * b * rgamma(c + 1.0) * fp
    return val, err, dval


def _legendre(mu, nu, x, with_derivative=False):
    mu = np.asarray(mu, dtype=complex)
    nu = np.asarray(nu, dtype=complex)
    x = np.asarray(x, dtype=float)
    mu, nu, x = np.broadcast_arrays(mu, nu, x)
    cut = np.abs(x) < 1.0
    flip = _positive_integer(mu)
    if not np.any(flip):
        return _legendre_core(mu, nu, x, with_derivative)
    # P^m = s * (nu+m)(nu+m-1)...(nu-m+1) * P^{-m}, s = (-1)^m on the cut
    m = np.where(flip, np.round(mu.real), 0.0)
    mu_eff = np.where(flip, -mu, mu)
    val, err, dval = _legendre_core(mu_eff, nu, x, with_derivative)
    factor = np.ones(mu.shape, dtype=complex)
    for k in range(int(m.max()) * 2):
        shift = m - k
        factor = np.where(k < 2 * m, factor * (nu + shift), factor)
    sign = np.where(cut & flip, (-1.0) ** m, 1.0)
    factor = np.where(flip, factor * sign, 1.0)
    return val * factor, err * np.abs(factor), None if dval is None else dval * factor


def _check_legendre_domain(x: np.ndarray) -> None:
    if np.any(x <= -1.0) or not np.all(np.isfinite(x)):
        raise SpecialFunctionError("Legendre argument must lie in (-1, 1) or (1, inf)")


def legendre_p(mu, nu, x, report: bool = False):
    """Associated Legendre function P^mu_nu(x).

    For x in (-1, 1) the Ferrers function (on the cut) is returned and for
    x > 1 the real-axis function; both come from the hypergeometric form
    ((1+x)/|1-x|)^(mu/2) 2F1(-nu, nu+1; 1-mu; (1-x)/2) / Gamma(1-mu).
    At x = 1 the limiting value is returned (1 for mu = 0).
    """
    if isinstance(x, Jet):
        return x.compose(legendre_derivatives(mu, nu, x.value, x.order))
    xx = np.asarray(x, dtype=float)
    _check_legendre_domain(xx)
    mu_c, nu_c = _as_complex(mu), _as_complex(nu)
    at_one = xx == 1.0
    if np.any(at_one):
        if np.any(mu_c.real > 0):
            raise SpecialFunctionError("P^mu_nu diverges at x = 1 for Re mu > 0")
        xs = np.where(at_one, 0.5, xx)
        val, err, _ = _legendre(mu_c, nu_c, xs)
        limit = np.where(np.broadcast_to(mu_c, val.shape) == 0, 1.0 + 0j, 0.0)
        val = np.where(at_one, limit, val)
        err = np.where(at_one, 0.0, err)
    else:
        val, err, _ = _legendre(mu_c, nu_c, xx)
    if report:
        if val.ndim == 0:
            return AccuracyReport(complex(val), float(err))
        return [AccuracyReport(complex(v), float(e)) for v, e in zip(val.ravel(), err.ravel())]
    return complex(val) if val.ndim == 0 else val


def legendre_derivatives(mu, nu, x, n: int) -> list:
    mu = np.asarray(mu, dtype=complex)
    nu = np.asarray(nu, dtype=complex)
    x = np.asarray(x, dtype=float)
    _check_legendre_domain(x)
    val, _, dval = _legendre(mu, nu, x, with_derivative=True)
    if n == 0:
        return [val]
    q = 1.0 - x * x
    lam = nu * (nu + 1.0)
    A = [q * q, -4.0 * x * q, 12.0 * x * x - 4.0]
    B = [-2.0 * x * q, -2.0 + 6.0 * x * x, 12.0 * x]
    C = [lam * q - mu * mu, -2.0 * lam * x, -2.0 * lam]
    return ode_derivatives(val, dval, A, B, C, n)


def _legendre_int_pos(l: int, m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ferrers P_l^m and P_{l-1}^m for 0 <= m <= l (Condon-Shortley phase)."""
    s = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    pmm = np.ones_like(x)
    for k in range(1, m + 1):
        pmm = -pmm * (2 * k - 1) * s
    if l == m:
        return pmm, np.zeros_like(x)
    prev, cur = pmm, x * (2 * m + 1) * pmm
    for ll in range(m + 1, l):
        prev, cur = cur, ((2 * ll + 1) * x * cur - (ll + m) * prev) / (ll - m + 1)
    return cur, prev


def _legendre_int(l: int, m: int, x, with_derivative: bool = False):
    x = np.asarray(x, dtype=float)
    am = abs(m)
    p, pm1 = _legendre_int_pos(l, am, x)
    scale = 1.0
    if m < 0:
        scale = (-1.0) ** am * math.exp(math.lgamma(l - am + 1) - math.lgamma(l + am + 1))
    if not with_derivative:
        return p * scale, None
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = ((l + am) * pm1 - l * x * p) / (1.0 - x * x)
    return p * scale, dp * scale


def _check_lm(l: int, m: int) -> None:
    if l < 0 or abs(m) > l:
        raise SpecialFunctionError(f"need 0 <= |m| <= l, got l={l}, m={m}")


def legendre_p_int(l: int, m: int, x):
    """Ferrers function P_l^m(x) of integer degree and order, x in [-1, 1]."""
    _check_lm(l, m)
    if isinstance(x, Jet):
        return x.compose(legendre_int_derivatives(l, m, x.value, x.order))
    xx = np.asarray(x, dtype=float)
    if np.any(np.abs(xx) > 1.0):
        raise SpecialFunctionError("P_l^m argument must lie in [-1, 1]")
    val, _ = _legendre_int(l, m, xx)
    return float(val) if val.ndim == 0 else val


def legendre_int_derivatives(l: int, m: int, x, n: int) -> list:
    x = np.asarray(x, dtype=float)
    val, dval = _legendre_int(l, m, x, with_derivative=True)
    if n == 0:
        return [val]
    q = 1.0 - x * x
    lam = float(l * (l + 1))
    A = [q * q, -4.0 * x * q, 12.0 * x * x - 4.0]
    B = [-2.0 * x * q, -2.0 + 6.0 * x * x, 12.0 * x]
    C = [lam * q - m * m, -2.0 * lam * x, -2.0 * lam]
    return ode_derivatives(val, dval, A, B, C, n)


def sph_harm_norm(l: int, m: int) -> float:
    return math.sqrt((2 * l + 1) / (4 * math.pi) * math.exp(math.lgamma(l - m + 1) - math.lgamma(l + m + 1)))


def sph_harm(l: int, m: int, theta, phi):
    """Spherical harmonic sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m(cos theta) e^{i m phi}."""
    _check_lm(l, m)
    if not isinstance(theta, Jet) and np.any((np.asarray(theta) < 0) | (np.asarray(theta) > np.pi)):
        raise SpecialFunctionError("theta must lie in [0, pi]")
    p = legendre_p_int(l, m, np.cos(theta))
    return sph_harm_norm(l, m) * p * np.exp(1j * m * phi)


def sph_harm_3_norm(j: int, l: int) -> float:
    return math.sqrt((j + 1) * math.exp(math.lgamma(j + l + 2) - math.lgamma(j - l + 1)))


def sphere3_radial(j: int, l: int, beta):
    """(sin beta)^(-1/2) P^{-l-1/2}_{j+1/2}(cos beta), real-valued."""
    val = legendre_p(-l - 0.5, j + 0.5, np.cos(beta)) * np.sin(beta) ** -0.5
    return val.real if isinstance(val, Jet) else np.real(val)


def sph_harm_3(j: int, l: int, m: int, beta, theta, phi):
    """Harmonic on S^3 built from a Gegenbauer-type radial factor and Y_lm."""
    if not (0 <= l <= j) or abs(m) > l:
        raise SpecialFunctionError(f"need 0 <= l <= j and |m| <= l, got j={j}, l={l}, m={m}")
    return sph_harm_3_norm(j, l) * sphere3_radial(j, l, beta) * sph_harm(l, m, theta, phi)


# ---------------------------------------------------------------------------
# Bessel J of real order


def _bessel_series(nu: float, x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(x > 0, half**nu, 1.0 if nu == 0 else (0.0 if nu > 0 else np.inf)) / math.gamma(nu + 1.0)
    total = term.copy()
    q = half * half
    for k in range(1, 200):
        term = -term * q / (k * (k + nu))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def _bessel_hankel(nu: float, x: np.ndarray) -> np.ndarray:
    mu4 = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 80):
        term = term * (mu4 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        active &= mag < last
        contrib = np.where(active, term, 0.0)
        if k % 2 == 1:
            q = q + (-1.0) ** ((k - 1) // 2) * contrib
        else:
            p = p + (-1.0) ** (k // 2) * contrib
        last = np.where(active, mag, last)
        if np.all(~active | (mag < 1e-17)):
            break
    chi = x - (nu / 2.0 + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _bessel_miller(nu: float, x: np.ndarray) -> np.ndarray:
    n = math.floor(nu)
    f = nu - n
    top = max(n, float(np.max(x)))
    start = int(top + 30 + math.sqrt(60.0 * top))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    saved = np.zeros_like(x)
    saved_up = np.zeros_like(x)
    norm = np.zeros_like(x)
    for k in range(start, -1, -1):
        if k % 2 == 0:
            i = k // 2
            c = math.gamma(f + 1.0) if i == 0 else (f + 2 * i) * math.exp(math.lgamma(f + i) - math.lgamma(i + 1))
            norm = norm + c * j_cur
        if k == max(n, 0):
            saved = j_cur.copy()
            saved_up = j_next.copy()
        if k == 0:
            break
        j_prev = 2.0 * (f + k) / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > 1e200
        if np.any(big):
            s = np.where(big, 1e-200, 1.0)
            j_cur, j_next, saved, saved_up, norm = j_cur * s, j_next * s, saved * s, saved_up * s, norm * s
    scale = (x / 2.0) ** f / norm
    if n >= 0:
        return saved * scale
    # nu = f - 1 with f in (0, 1): one more downward step
    return (2.0 * f / x * saved - saved_up) * scale


def bessel_j(nu: float, x):
    """Bessel function J_nu(x) for real nu >= -1/2 and x >= 0."""
    nu = float(nu)
    if nu < -0.5:
        raise SpecialFunctionError("bessel_j requires nu >= -1/2")
    if isinstance(x, Jet):
        return x.compose(bessel_j_derivatives(nu, x.value, x.order))
    xx = np.asarray(x, dtype=float)
    if np.any(xx < 0) or not np.all(np.isfinite(xx)):
        raise SpecialFunctionError("bessel_j requires finite x >= 0")
    out = np.empty(xx.shape)
    small = xx <= 8.0
    large = xx > max(25.0, 1.5 * nu * nu)
    mid = ~small & ~large
    if np.any(small):
        out[small] = _bessel_series(nu, xx[small])
    if np.any(large):
        out[large] = _bessel_hankel(nu, xx[large])
    if np.any(mid):
        out[mid] = _bessel_miller(nu, xx[mid])
    return float(out) if out.ndim == 0 else out


def bessel_j_derivatives(nu: float, x, n: int) -> list:
    x = np.asarray(x, dtype=float)
    j0 = np.asarray(bessel_j(nu, x))
    if n == 0:
        return [j0]
    j1 = nu / x * j0 - np.asarray(bessel_j(nu + 1.0, x))
    A = [x * x, 2.0 * x, 2.0]
    B = [x, 1.0]
    C = [x * x - nu * nu, 2.0 * x, 2.0]
    return ode_derivatives(j0, j1, A, B, C, n)


# ---------------------------------------------------------------------------
# Macdonald function of imaginary order


def _kir_nodes(rho_max: float, x_min: float, x_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes/weights in t for  int_0^inf e^{-x cosh t} cos(rho t) dt.

    The integrand decays double exponentially in t and is analytic in the
    strip |Im t| < pi/2, so the trapezoid rule converges geometrically.  The
    step is chosen so that the strip-width error bound
    exp(rho d + x (1 - cos d) - 2 pi d / h) stays below about e^-42.
    """
    d = np.linspace(0.05, 1.5, 60)
    h = float(np.max(2.0 * np.pi * d / (42.0 + d * rho_max + x_max * (1.0 - np.cos(d)))))
    tmax = math.acosh(max(760.0 / x_min, 1.0)) + 0.5
    t = np.arange(0.0, tmax + h, h)
    w = np.full_like(t, h)
    w[0] = 0.5 * h
    return t, w


def _kir(rho, x, deriv: int = 0, with_err: bool = False):
    rho = np.asarray(rho, dtype=float)
    x = np.asarray(x, dtype=float)
    rho, x = np.broadcast_arrays(rho, x)
    shape = x.shape
    rf, xf = rho.ravel(), x.ravel()
    if xf.size == 0:
        return np.zeros(shape), np.zeros(shape)
    t, w = _kir_nodes(float(rf.max()), float(xf.min()), float(xf.max()))
    ch = np.cosh(t)
    kern = w * (-ch) ** deriv
    out = np.empty(xf.size)
    err = np.empty(xf.size)
    block = max(1, 400000 // t.size)
    for s in range(0, xf.size, block):
        xs, rs = xf[s : s + block], rf[s : s + block]
        with np.errstate(under="ignore"):
            vals = np.exp(-np.outer(xs, ch)) * np.cos(np.outer(rs, t)) * kern
        out[s : s + block] = vals.sum(axis=1)
        if with_err:
            coarse = 2.0 * vals[:, ::2].sum(axis=1) - vals[:, 0]
            err[s : s + block] = np.abs(out[s : s + block] - coarse) + 1e-16 * np.abs(vals).sum(axis=1)
    return out.reshape(shape), err.reshape(shape)


def macdonald_k_imag(rho, x, report: bool = False):
    """Macdonald function K_{i rho}(x) for real rho >= 0 and x > 0 (real-valued)."""
    if isinstance(x, Jet):
        return x.compose(macdonald_k_derivatives(rho, x.value, x.order))
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= 0) or not np.all(np.isfinite(xx)):
        raise SpecialFunctionError("macdonald_k_imag requires x > 0")
    if np.any(np.asarray(rho) < 0):
        raise SpecialFunctionError("macdonald_k_imag requires rho >= 0")
    val, err = _kir(rho, xx, 0, with_err=report)
    if report:
        if val.ndim == 0:
            return AccuracyReport(complex(float(val)), float(err))
        return [AccuracyReport(complex(v), float(e)) for v, e in zip(val.ravel(), err.ravel())]
    return float(val) if val.ndim == 0 else val


def macdonald_k_derivatives(rho, x, n: int) -> list:
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    k0, _ = _kir(rho, x, 0)
    if n == 0:
        return [k0]
    k1, _ = _kir(rho, x, 1)
    A = [x * x, 2.0 * x, 2.0]
    B = [x, 1.0]
    C = [rho * rho - x * x, -2.0 * x, -2.0]
    return ode_derivatives(k0, k1, A, B, C, n)


def macdonald_k_table(rhos, xs) -> np.ndarray:
    """Matrix K_{i rho_j}(x_i) of shape (len(xs), len(rhos)) via one matrix product."""
    rhos = np.asarray(rhos, dtype=float).ravel()
    xs = np.asarray(xs, dtype=float).ravel()
    if np.any(xs <= 0):
        raise SpecialFunctionError("macdonald_k_table requires x > 0")
    t, w = _kir_nodes(float(rhos.max()), float(xs.min()), float(xs.max()))
    ch = np.cosh(t)
    weights = w[:, None] * np.cos(np.outer(t, rhos))
    out = np.empty((xs.size, rhos.size))
    block = max(1, 2_000_000 // t.size)
    for s in range(0, xs.size, block):
        with np.errstate(under="ignore"):
            out[s : s + block] = np.exp(-np.outer(xs[s : s + block], ch)) @ weights
    return out

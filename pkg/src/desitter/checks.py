"""Verification suites shared by the command line and the test-suite.

Each suite returns a list of :class:`Check` records.  Residuals are scaled
as documented per suite and compared against a fixed tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import specfn
from .bases import (
    RHO_MIN,
    SpectralLabel,
    basis_field,
    cone_match_residual,
    eigenvalues,
    h4_values,
)
from .charts import ChartId, Surface, as_chart, as_surface, bilinear, chart_map, inverse_map, sample_params
from .generators import (
    ScalarField,
    casimir_F,
    casimir_scale,
    casimir_W,
    compose_apply,
    generator_op,
    laplacian,
    singular_distance,
    subgroup_invariant,
    subgroup_invariants,
)
from .transforms import (
    BUMP_BATTERY,
    TruncationSpec,
    analyze,
    build_grid,
    build_section_grid,
    gaussian_bump,
    gg_transform,
    hyperboloid_point,
    plancherel_check,
    random_group_element,
    roundtrip_error,
    transition_coefficients,
    transition_row_sum,
    translate,
)

ALL_CHARTS = tuple(ChartId)


@dataclass
class Check:
    name: str
    tag: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tol)

    def to_dict(self) -> dict:
        return {"name": self.name, "tag": self.tag, "residual": float(self.residual), "tol": self.tol, "pass": self.passed}


def summarize(checks: list[Check]) -> dict:
    failed = [c.name for c in checks if not c.passed]
    return {"total": len(checks), "passed": len(checks) - len(failed), "failed": failed}


# ---------------------------------------------------------------------------
# charts


def chart_identity_checks(rng: np.random.Generator, n: int = 1000) -> list[Check]:
    """Quadratic-form residuals and chart roundtrips for every chart on both surfaces.

    The roundtrip maps random parameters to homogeneous coordinates, inverts
    in every chart and maps back; the residual is the largest coordinate
    difference relative to 1 + |x|.
    """
    out = []
    for surface in Surface:
        for chart in ALL_CHARTS:
            p = sample_params(chart, surface, n, rng)
            eps = rng.choice([-1.0, 1.0], n) if (chart is ChartId.H and surface is Surface.CONE) else None
            x = np.array(chart_map(chart, surface, p, eps))
            norm = 1.0 + np.sum(x * x, axis=0)
            if surface is Surface.HYPERBOLOID:
                form = np.max(np.abs(bilinear(x, x) - 1.0))
            else:
                form = np.max(np.abs(bilinear(x, x)) / norm)
            out.append(Check(f"quadratic-form/{chart.value}/{surface.value}", "surface constraint", float(form), 1e-12))
            worst = 0.0
            for target in ALL_CHARTS:
                xt = x
                if surface is Surface.CONE and target in (ChartId.O, ChartId.OC, ChartId.OT):
                    keep = (x[0] - x[4]) > 1e-6 * x[0]
                    xt = x[:, keep]
                q, e, _ = inverse_map(target, surface, xt)
                back = np.array(chart_map(target, surface, q, e))
                worst = max(worst, float(np.max(np.abs(back - xt) / np.sqrt(1.0 + np.sum(xt * xt, axis=0)))))
            out.append(Check(f"roundtrip/{chart.value}/{surface.value}", "chart transfer", worst, 1e-10))
    return out


# ---------------------------------------------------------------------------
# generators

_EPS3 = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}


def commutator_table() -> list[tuple[str, str, dict[str, complex]]]:
    """The 45 relations [A, B] = sum_C c_C C of the de Sitter algebra."""
    rel = []
    axes = range(3)
    for k in axes:
        for l in axes:
            if k >= l:
                continue
            m = 3 - k - l
            e = _EPS3[(k, l, m)]
            rel.append((f"M{k+1}", f"M{l+1}", {f"M{m+1}": 1j * e}))
            rel.append((f"N{k+1}", f"N{l+1}", {f"M{m+1}": -1j * e}))
            rel.append((f"P{k+1}", f"P{l+1}", {f"M{m+1}": 1j * e}))
    for k in axes:
        for l in axes:
            if k == l:
                rel.append((f"M{k+1}", f"N{l+1}", {}))
                rel.append((f"M{k+1}", f"P{l+1}", {}))
            else:
                m = 3 - k - l
                e = _EPS3[(k, l, m)]
                rel.append((f"M{k+1}", f"N{l+1}", {f"N{m+1}": 1j * e}))
                rel.append((f"M{k+1}", f"P{l+1}", {f"P{m+1}": 1j * e}))
            rel.append((f"P{k+1}", f"N{l+1}", {"P0": 1j} if k == l else {}))
        rel.append((f"M{k+1}", "P0", {}))
        rel.append(("P0", f"N{k+1}", {f"P{k+1}": 1j}))
        rel.append(("P0", f"P{k+1}", {f"N{k+1}": 1j}))
    return rel


def random_field(rng: np.random.Generator, chart, surface, terms: int = 3, batch: int | None = None) -> ScalarField:
    """Sum of a few random complex exponentials of the chart parameters (jet-compatible).

    With ``batch`` set, every coefficient is an array of that length, so the
    field evaluated at a batch of points is a different random field per point.
    """
    shape = (terms,) if batch is None else (terms, batch)
    coef = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    freq = rng.normal(scale=0.6, size=(4,) + shape)
    damp = rng.normal(scale=0.3, size=(4,) + shape)

    def fn(p, eps=None):
        acc = 0.0
        for t in range(terms):
            phase = sum((damp[i][t] + 1j * freq[i][t]) * p[i] for i in range(4))
            acc = acc + coef[t] * np.exp(phase)
        return acc

    return ScalarField(fn, as_chart(chart), as_surface(surface), "random")


def _sample_regular(chart, surface, n, rng, spread=1.5):
    p = sample_params(chart, surface, 4 * n, rng, spread)
    keep = singular_distance(chart, surface, p) > 1e-3
    return p[:, keep][:, :n]


def commutator_checks(chart, surface, rng: np.random.Generator, n_pairs: int = 100) -> list[Check]:
    """Residual of ([A,B] - expected) f at random (field, point) pairs, scaled by 1 + |f| + |grad f|."""
    chart, surface = as_chart(chart), as_surface(surface)
    points = _sample_regular(chart, surface, n_pairs, rng)
    n = points.shape[1]
    f = random_field(rng, chart, surface, batch=n)
    eps = np.ones(n) if (chart is ChartId.H and surface is Surface.CONE) else None
    ops = {name: generator_op(chart, surface, name) for name in ("M1", "M2", "M3", "P1", "P2", "P3", "N1", "N2", "N3", "P0")}
    j1 = f.jet(points, 1, eps)
    scale = 1.0 + np.abs(j1.value) + np.sqrt(sum(np.abs(j1.grad(k)) ** 2 for k in range(4)))
    single = {g: np.asarray(compose_apply([ops[g]], f, points, eps)) for g in ops}
    out = []
    for a, b, expected in commutator_table():
        ab = np.asarray(compose_apply([ops[a], ops[b]], f, points, eps))
        ba = np.asarray(compose_apply([ops[b], ops[a]], f, points, eps))
        rhs = sum(c * single[g] for g, c in expected.items()) if expected else 0.0
        worst = float(np.max(np.abs(ab - ba - rhs) / scale))
        out.append(Check(f"commutator/{chart.value}/{surface.value}/[{a},{b}]", "commutation relations", worst, 1e-8))
    return out


def laplacian_checks(chart, rng: np.random.Generator, n: int = 50, surface=Surface.HYPERBOLOID) -> list[Check]:
    """-F from generator products against the chart Laplacian on random fields, relative to the field's 2-jet."""
    chart, surface = as_chart(chart), as_surface(surface)
    worst = 0.0
    for _ in range(n // 10 or 1):
        p = _sample_regular(chart, surface, 10, rng)
        f = random_field(rng, chart, surface, batch=p.shape[1])
        eps = np.ones(p.shape[1]) if (chart is ChartId.H and surface is Surface.CONE) else None
        lap = np.asarray(laplacian(chart, surface, f, p, eps))
        cas = np.asarray(casimir_F(f, p, chart, surface, eps))
        scale = casimir_scale(f, p, chart, surface, eps, order=2)
        worst = max(worst, float(np.max(np.abs(lap + cas) / scale)))
    return [Check(f"laplacian/{chart.value}/{surface.value}", "Laplacian equals -F", worst, 1e-8)]


# ---------------------------------------------------------------------------
# bases


def random_label(chart, rng: np.random.Generator, cap: int = 4, rho_range=(0.2, 3.0)) -> SpectralLabel:
    chart = as_chart(chart)
    rho = float(rng.uniform(*rho_range))
    l = int(rng.integers(0, cap + 1))
    m = int(rng.integers(-l, l + 1))
    if chart is ChartId.S:
        j = int(rng.integers(l, l + 3))
        return SpectralLabel(chart, rho, j=j, l=l, m=m)
    if chart is ChartId.H:
        return SpectralLabel(chart, rho, nu=float(rng.uniform(0.05, 2.0)), l=l, m=m, eps=int(rng.choice([-1, 1])))
    if chart is ChartId.O:
        return SpectralLabel(chart, rho, kappa=float(rng.uniform(0.2, 2.0)), l=l, m=m)
    if chart is ChartId.OC:
        return SpectralLabel(chart, rho, eta=float(rng.uniform(0.2, 2.0)), q=float(rng.uniform(-1.5, 1.5)), m=m)
    if chart is ChartId.OT:
        return SpectralLabel(chart, rho, kvec=tuple(float(v) for v in rng.uniform(-1.2, 1.2, 3)))
    if chart is ChartId.C:
        return SpectralLabel(chart, rho, tau=float(rng.uniform(-2.0, 2.0)), l=l, m=m)
    return SpectralLabel(chart, rho, omega=float(rng.uniform(0.05, 2.0)), mprime=int(rng.integers(-cap, cap + 1)), m=m)


def eigen_checks(chart, surface, rng: np.random.Generator, n_labels: int = 20, n_points: int = 50) -> list[Check]:
    """F, every subgroup invariant and W on random basis functions at random points.

    Residuals are |op f - lambda f| divided by the magnitude of the field's
    4-jet at each point, maximized over labels and points.
    """
    chart, surface = as_chart(chart), as_surface(surface)
    worst: dict[str, float] = {}
    for _ in range(n_labels):
        lab = random_label(chart, rng)
        f = basis_field(lab, surface)
        p = _sample_regular(chart, surface, n_points, rng, spread=1.5)
        eps = np.full(p.shape[1], float(lab.eps)) if (chart is ChartId.H and surface is Surface.CONE) else None
        fv = np.asarray(f.jet(p, 0, eps).value)
        scale = casimir_scale(f, p, chart, surface, eps)
        ev = eigenvalues(lab)
        res = {"F": np.abs(np.asarray(casimir_F(f, p, chart, surface, eps)) - ev["F"] * fv) / scale}
        res["laplacian"] = np.abs(np.asarray(laplacian(chart, surface, f, p, eps)) + ev["F"] * fv) / scale
        for name in subgroup_invariants(chart):
            v = np.asarray(subgroup_invariant(chart, name, f, p, surface, eps))
            res[name] = np.abs(v - ev[name] * fv) / scale
        res["W"] = np.abs(np.asarray(casimir_W(f, p, chart, surface, eps))) / scale
        for k, v in res.items():
            worst[k] = max(worst.get(k, 0.0), float(np.max(v)))
    out = []
    for k, v in worst.items():
        tag = "W vanishes on class-one representations" if k == "W" else "eigenvalue equation"
        out.append(Check(f"eigen/{chart.value}/{surface.value}/{k}", tag, v, 1e-6))
    return out


def _discrete_family(chart: ChartId, rng: np.random.Generator, cap: int = 3) -> list[SpectralLabel]:
    """Labels that differ only in their discrete quantum numbers."""
    rho = float(rng.uniform(0.5, 2.0))
    labs = []
    if chart is ChartId.S:
        for j in range(cap + 1):
            for l in range(j + 1):
                for m in range(-l, l + 1):
                    labs.append(SpectralLabel(chart, rho, j=j, l=l, m=m))
    elif chart in (ChartId.H, ChartId.O, ChartId.C):
        extra = {ChartId.H: {"nu": 0.8}, ChartId.O: {"kappa": 1.1}, ChartId.C: {"tau": 0.6}}[chart]
        for l in range(cap + 1):
            for m in range(-l, l + 1):
                labs.append(SpectralLabel(chart, rho, l=l, m=m, **extra))
    elif chart is ChartId.OC:
        for m in range(-cap, cap + 1):
            labs.append(SpectralLabel(chart, rho, eta=0.9, q=0.4, m=m))
    elif chart is ChartId.SH:
        for mp in range(-cap, cap + 1):
            for m in range(-cap, cap + 1):
                labs.append(SpectralLabel(chart, rho, omega=0.7, mprime=mp, m=m))
    return labs


def orthogonality_checks(chart, rng: np.random.Generator, spec: TruncationSpec | None = None) -> list[Check]:
    """Largest off-diagonal Gram entry over the geometric mean of the two diagonal entries.

    The Gram matrix is taken over the chart's quadrature grid among basis
    functions sharing every continuous label.  The OT chart has no discrete
    labels and reports nothing.
    """
    chart = as_chart(chart)
    labs = _discrete_family(chart, rng)
    if not labs:
        return []
    spec = spec or TruncationSpec(n_radial=8, n_angle=16, n_circle=16, n_transverse=24)
    grid = build_grid(chart, Surface.HYPERBOLOID, spec)
    p = grid.params()
    w = grid.weights.ravel()
    vals = np.array([np.asarray(h4_values(lab, p)).ravel() for lab in labs])
    gram = (np.conj(vals) * w) @ vals.T
    d = np.sqrt(np.abs(np.diag(gram)))
    rel = np.abs(gram) / np.outer(d, d)
    np.fill_diagonal(rel, 0.0)
    return [Check(f"orthogonality/{chart.value}", "orthogonality of discrete labels", float(rel.max()), 1e-6)]


def cone_match_checks(rng: np.random.Generator, n: int = 10) -> list[Check]:
    """Hyperboloid-to-cone asymptotics of random S labels: residual below 1e-3 at a=10, nonincreasing to a=12."""
    out = []
    for _ in range(n):
        lab = random_label(ChartId.S, rng, cap=4, rho_range=(0.2, 4.0))
        res = [cone_match_residual(lab, a) for a in (10.0, 10.5, 11.0, 11.5, 12.0)]
        tag = f"cone limit j={lab.j} l={lab.l} m={lab.m} rho={lab.rho:.4f}"
        out.append(Check(f"cone-match/a=10/{tag}", "cone limit of the S family", res[0], 1e-3))
        growth = max(0.0, max(b - a for a, b in zip(res, res[1:])))
        out.append(Check(f"cone-match/monotone/{tag}", "cone limit of the S family", growth, 1e-300))
    return out


# ---------------------------------------------------------------------------
# transforms


def plancherel_checks(chart, spec: TruncationSpec | None = None) -> list[Check]:
    """Bump battery: Plancherel mismatch |lhs - rhs| / lhs and L2 roundtrip error."""
    chart = as_chart(chart)
    spec = spec or TruncationSpec()
    out = []
    for i, (alpha, center) in enumerate(BUMP_BATTERY):
        f = gaussian_bump(alpha, center)
        coeffs = analyze(f, chart, spec)
        lhs, rhs = plancherel_check(f, coeffs)
        out.append(Check(f"plancherel/{chart.value}/bump{i}", "Plancherel identity", abs(lhs - rhs) / lhs, 1e-2))
        out.append(Check(f"roundtrip/{chart.value}/bump{i}", "expansion roundtrip", roundtrip_error(f, coeffs), 1e-2))
    return out


def gg_checks(rng: np.random.Generator, n: int = 20) -> list[Check]:
    """Rotation and group-shift equivariance of the orispherical transform on a fixed off-center bump."""
    psi = gaussian_bump(2.0, hyperboloid_point(0.3, (0.2, 0.5, -0.4, 0.7)))
    rot_worst = 0.0
    shift_worst = 0.0
    for _ in range(n):
        dirn = rng.normal(size=4)
        k0 = rng.uniform(0.6, 1.6)
        k = np.concatenate([[k0], k0 * dirn / np.linalg.norm(dirn)])
        g = random_group_element(rng)
        lhs = gg_transform(translate(psi, g), k)
        rhs = gg_transform(psi, np.linalg.solve(g, k))
        shift_worst = max(shift_worst, abs(lhs - rhs) / abs(rhs))
        r = random_group_element(rng, max_rapidity=0.0)
        lhs = gg_transform(translate(psi, r), k)
        rhs = gg_transform(psi, r.T @ k)
        rot_worst = max(rot_worst, abs(lhs - rhs) / abs(rhs))
    return [
        Check("gg/rotation-equivariance", "orispherical transform equivariance", rot_worst, 1e-5),
        Check("gg/shift-equivariance", "orispherical transform equivariance", shift_worst, 1e-5),
    ]


def transition_checks(rng: np.random.Generator, n: int = 3, cap: int = 2) -> list[Check]:
    """S-to-C row sums of |<S|C>|^2 over C labels (l <= cap, tau on a Gauss rule) against 1."""
    spec = TruncationSpec(n_radial=240, n_angle=12, n_circle=13)
    grid = build_section_grid(ChartId.C, spec, extent=12.0)
    s_grid = build_section_grid(ChartId.S, spec)
    out = []
    for _ in range(n):
        lab = random_label(ChartId.S, rng, cap=cap, rho_range=(0.3, 2.5))
        tag = f"j={lab.j} l={lab.l} m={lab.m} rho={lab.rho:.4f}"
        self_overlap = transition_coefficients(lab, lab, Surface.CONE, s_grid)
        out.append(Check(f"transition/self/{tag}", "transition coefficients", abs(self_overlap - 1.0), 1e-2))
        row = transition_row_sum(lab, ChartId.C, grid, cap=max(cap, lab.l), label_max=8.0, n_label=64)
        out.append(Check(f"transition/row-sum/{tag}", "transition unitarity", abs(row - 1.0), 2e-2))
    return out


# ---------------------------------------------------------------------------
# special functions against independent oracles


def _mp():
    import mpmath

    mpmath.mp.dps = 30
    return mpmath


def _rodrigues_legendre(l: int, m: int, x: float) -> float:
    """P_l^m(x) with the Condon-Shortley phase from exact Rodrigues coefficients."""
    # (x^2 - 1)^l expanded with exact binomials, then differentiated l + m times
    poly = [Fraction(0)] * (2 * l + 1)
    for k in range(l + 1):
        poly[2 * k] = Fraction(math.comb(l, k) * (-1) ** (l - k))
    for _ in range(l + abs(m)):
        poly = [poly[i] * i for i in range(1, len(poly))] or [Fraction(0)]
    val = sum(float(c) * x**i for i, c in enumerate(poly))
    val /= 2**l * math.factorial(l)
    out = (-1) ** m * (1.0 - x * x) ** (abs(m) / 2.0) * val
    if m < 0:
        mm = -m
        out = (-1) ** mm * math.factorial(l - mm) / math.factorial(l + mm) * ((-1) ** mm * (1.0 - x * x) ** (mm / 2.0) * val)
    return out


def specfn_checks(n: int = 200, quick: bool = False, seed: int = 0) -> list[Check]:
    """Every special function against its brute-force oracle on an n-point parameter sample."""
    mp = _mp()
    rng = np.random.default_rng(seed)
    if quick:
        n = min(n, 20)
    out = []

    def record(name, res, tol, tag):
        out.append(Check(f"specfn/{name}", tag, float(res), tol))

    # Gamma: Euler integral of Gamma(z + 3), divided back by z (z + 1) (z + 2)
    zs = rng.uniform(0.5, 6.0, n) + 1j * rng.uniform(-6.0, 6.0, n)
    worst = 0.0
    for z in zs:
        w = mp.mpc(z) + 3
        ref = mp.quad(lambda t: t ** (w - 1) * mp.exp(-t), [0, 1, 10, 40, mp.inf]) / (w - 1) / (w - 2) / (w - 3)
        got = specfn.gamma_complex(z)
        worst = max(worst, abs(got - complex(ref)) / abs(complex(ref)))
    record("gamma_complex", worst, 1e-12, "Euler integral")

    # Legendre functions: hypergeometric representation summed in extended precision
    worst = 0.0
    for _ in range(n):
        mu = complex(rng.uniform(-2.0, 1.0), rng.uniform(-2.0, 2.0))
        nu = complex(-0.5, rng.uniform(0.0, 3.0)) if rng.random() < 0.5 else complex(rng.uniform(0.0, 3.0), 0.0)
        if rng.random() < 0.5:
            x = float(rng.uniform(-0.9, 0.9))
            pref = ((1 + mp.mpf(x)) / (1 - mp.mpf(x))) ** (mp.mpc(mu) / 2)
        else:
            x = float(rng.uniform(1.05, 3.0))
            pref = ((mp.mpf(x) + 1) / (mp.mpf(x) - 1)) ** (mp.mpc(mu) / 2)
        ref = complex(pref * mp.hyp2f1(-mp.mpc(nu), mp.mpc(nu) + 1, 1 - mp.mpc(mu), (1 - mp.mpf(x)) / 2) / mp.gamma(1 - mp.mpc(mu)))
        got = complex(specfn.legendre_p(mu, nu, x))
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    record("legendre_p", worst, 1e-10, "hypergeometric representation")

    # integer-order Legendre: exact Rodrigues coefficients
    worst = 0.0
    for _ in range(n):
        l = int(rng.integers(0, 9))
        m = int(rng.integers(-l, l + 1))
        x = float(rng.uniform(-1.0, 1.0))
        ref = _rodrigues_legendre(l, m, x)
        got = float(np.real(specfn.legendre_p_int(l, m, x)))
        worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
    record("legendre_p_int", worst, 1e-12, "Rodrigues formula")

    # Bessel J: Schlafli integral
    worst = 0.0
    for _ in range(n):
        nu = float(rng.choice([rng.uniform(-0.5, 8.0), rng.integers(0, 8) + 0.5]))
        x = float(rng.uniform(0.01, 40.0))
        X, V = mp.mpf(x), mp.mpf(nu)
        ref = mp.quad(lambda t: mp.cos(V * t - X * mp.sin(t)), mp.linspace(0, mp.pi, 9)) / mp.pi
        ref -= mp.sin(V * mp.pi) / mp.pi * mp.quad(lambda t: mp.exp(-X * mp.sinh(t) - V * t), [0, mp.asinh(10 / X), mp.asinh(100 / X)])
        got = float(specfn.bessel_j(nu, x))
        envelope = min(1.0, math.sqrt(2.0 / (math.pi * x)))
        worst = max(worst, abs(got - float(ref)) / max(abs(float(ref)), envelope))
    record("bessel_j", worst, 1e-10, "Schlafli integral")

    # Macdonald K_{i rho}: brute-force trapezoid with 10^6 nodes
    worst = 0.0
    for _ in range(n):
        rho = float(rng.uniform(0.0, 20.0 if quick else 50.0))
        x = float(10 ** rng.uniform(-3.0, 1.5))
        tmax = math.acosh(60.0 / x) if x < 60.0 else 1.0
        t = np.linspace(0.0, tmax, 1_000_001)
        y = np.exp(-x * np.cosh(t)) * np.cos(rho * t)
        h = t[1] - t[0]
        ref = h * (np.sum(y) - 0.5 * (y[0] + y[-1]))
        got = float(np.real(specfn.macdonald_k_imag(rho, x)))
        worst = max(worst, abs(got - ref))
    record("macdonald_k_imag", worst, 1e-10, "trapezoid integral")

    # 2F1: raw series in extended precision
    worst = 0.0
    for _ in range(n):
        a = complex(rng.uniform(-1.5, 2.0), rng.uniform(-2.0, 2.0))
        b = complex(rng.uniform(-1.5, 2.0), rng.uniform(-2.0, 2.0))
        c = complex(rng.uniform(0.3, 3.0), rng.uniform(-1.0, 1.0))
        z = float(rng.uniform(-0.9, 0.9))
        A, B, C, Z = mp.mpc(a), mp.mpc(b), mp.mpc(c), mp.mpf(z)
        term, total, k = mp.mpc(1), mp.mpc(1), 0
        while abs(term) > mp.mpf(10) ** -28 * max(1, abs(total)) or k < 5:
            term *= (A + k) * (B + k) / ((C + k) * (k + 1)) * Z
            total += term
            k += 1
            if k > 20000:
                break
        ref = complex(total)
        got = complex(specfn.gauss_2f1(a, b, c, z))
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    record("gauss_2f1", worst, 1e-10, "raw hypergeometric series")

    # Y_lm: normalization constant times the Rodrigues Legendre function
    worst = 0.0
    for _ in range(n):
        l = int(rng.integers(0, 8))
        m = int(rng.integers(-l, l + 1))
        th, ph = float(rng.uniform(0, math.pi)), float(rng.uniform(0, 2 * math.pi))
        norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))
        ref = norm * _rodrigues_legendre(l, m, math.cos(th)) * complex(math.cos(m * ph), math.sin(m * ph))
        got = complex(specfn.sph_harm(l, m, th, ph))
        worst = max(worst, abs(got - ref))
    record("sph_harm", worst, 1e-12, "explicit Legendre form")

    # Y_jlm: Gegenbauer form normalized on S^3
    worst = 0.0
    for _ in range(n):
        j = int(rng.integers(0, 7))
        l = int(rng.integers(0, j + 1))
        m = int(rng.integers(-l, l + 1))
        be, th, ph = float(rng.uniform(0, math.pi)), float(rng.uniform(0, math.pi)), float(rng.uniform(0, 2 * math.pi))
        k = j - l
        norm_sq = mp.pi * mp.mpf(2) ** (1 - 2 * (l + 1)) * mp.gamma(k + 2 * l + 2) / (mp.factorial(k) * (k + l + 1) * mp.gamma(l + 1) ** 2)
        radial = mp.sin(be) ** l * mp.gegenbauer(k, l + 1, mp.cos(be)) / mp.sqrt(norm_sq)
        ref = complex(radial) * complex(specfn.sph_harm(l, m, th, ph))
        got = complex(specfn.sph_harm_3(j, l, m, be, th, ph))
        worst = max(worst, abs(got - ref))
    record("sph_harm_3", worst, 1e-10, "Gegenbauer form")
    return out

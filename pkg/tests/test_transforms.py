import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from desitter.bases import SpectralLabel
from desitter.charts import ChartId, ChartPoint
from desitter.specfn import gamma_complex, sph_harm_3
from desitter.transforms import (
    BUMP_BATTERY,
    CoefficientSet,
    TransformError,
    TruncationSpec,
    WavePacket,
    analyze,
    build_grid,
    build_section_grid,
    evaluate_on_grid,
    gaussian_bump,
    gg_transform,
    halfline_rule,
    homogeneous_component,
    hyperboloid_point,
    inner_product,
    packet_overlap,
    packet_transition,
    plan_for,
    plancherel_check,
    printed_plancherel_rhs,
    random_group_element,
    read_grid_csv,
    synthesize,
    synthesize_on_grid,
    transition_coefficients,
    transition_matrix,
    translate,
    wave_packet,
    write_grid_csv,
)

SMALL = TruncationSpec(rho_max=6.0, n_rho=32, cap=3, n_radial=24, n_angle=12, n_circle=12, n_transverse=24)


# ---------------------------------------------------------------- grids


def test_s_angular_rule():
    g = build_grid("S", "hyperboloid", TruncationSpec())
    beta, w = g.axes[1], g.axis_weights[1]
    assert abs(np.sum(w * np.sin(beta) ** 2) - math.pi / 2) < 1e-12


def test_s3_volume():
    g = build_grid("S", "hyperboloid", TruncationSpec())
    b, t, p = g.axes[1:]
    wb, wt, wp = g.axis_weights[1:]
    vol = np.sum(wb * np.sin(b) ** 2) * np.sum(wt * np.sin(t)) * np.sum(wp)
    assert abs(vol - 2 * math.pi**2) < 1e-12


def test_halfline_rule_against_adaptive_quadrature():
    f = lambda a: math.exp(3 * math.log1p(-math.exp(-2 * a)) + 3 * a - a * a) / 8 if a > 0 else 0.0
    ref, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    x, w = halfline_rule(80)
    assert abs(np.sum(w * np.array([f(v) for v in x])) - ref) < 1e-9 * ref


def test_grid_volume_matches_ball():
    # volume of the geodesic ball of radius R is 2 pi^2 integral of sinh^3
    spec = TruncationSpec(radius=2.0)
    ref = 2 * math.pi**2 * (math.cosh(2.0) ** 3 / 3 - math.cosh(2.0) + 2 / 3)
    assert abs(build_grid("S", "hyperboloid", spec).volume() - ref) < 1e-10 * ref


def test_cone_h_grid_rejected():
    with pytest.raises(TransformError):
        build_grid("H", "cone", TruncationSpec())


@pytest.mark.parametrize("bad", [dict(n_rho=4), dict(cap=20), dict(radius=-1.0), dict(rho_max=float("nan")), dict(n_radial=2.5)])
def test_truncation_validation(bad):
    with pytest.raises(TransformError):
        TruncationSpec(**bad)


def test_truncation_json_roundtrip():
    spec = TruncationSpec(rho_max=5.0, cap=2)
    assert TruncationSpec.from_json(json.dumps(spec.to_dict())) == spec
    with pytest.raises(TransformError):
        TruncationSpec.from_dict({"bogus": 1})


# ---------------------------------------------------------------- inner products


def _random_field(rng):
    c = rng.normal(size=5) + 1j * rng.normal(size=5)
    return lambda *x: np.exp(-2.0 * (x[0] - 1)) * (c[0] + sum(ci * xi for ci, xi in zip(c[1:], x[1:])))


def test_inner_product_positive(rng):
    g = build_grid("H", "hyperboloid", SMALL)
    f = _random_field(rng)
    v = inner_product(f, f, g)
    assert v.real > 0 and v.imag == 0.0


def test_inner_product_conjugate_symmetric(rng):
    g = build_grid("O", "hyperboloid", SMALL)
    f, h = _random_field(rng), _random_field(rng)
    assert inner_product(f, h, g) == np.conj(inner_product(h, f, g))


def test_angular_orthogonality_on_grid():
    g = build_grid("S", "hyperboloid", SMALL)
    radial = lambda a: np.exp(-a * a)
    f = lambda p, eps=None: radial(p[0]) * sph_harm_3(1, 0, 0, p[1], p[2], p[3])
    h = lambda p, eps=None: radial(p[0]) * sph_harm_3(0, 0, 0, p[1], p[2], p[3])
    from desitter.generators import ScalarField

    ip = inner_product(ScalarField(f, ChartId.S, "hyperboloid"), ScalarField(h, ChartId.S, "hyperboloid"), g)
    assert abs(ip) < 1e-10


def test_evaluation_failure_reported():
    g = build_grid("S", "hyperboloid", SMALL)
    with np.errstate(divide="ignore"), pytest.raises(TransformError):
        evaluate_on_grid(lambda *x: x[0] / 0.0, g)


# ---------------------------------------------------------------- analysis and synthesis


def test_single_packet_concentrates_on_its_label():
    spec = TruncationSpec(cap=3, n_circle=8, rho_max=6.0, n_rho=48)
    f = wave_packet(SpectralLabel("S", 2.0, j=1, l=1, m=0), WavePacket(2.0), "hyperboloid")
    c = analyze(f, "S", spec)
    v = np.abs(c.values)
    on = np.zeros(v.shape, dtype=bool)
    on[:, 1, 1, spec.cap] = True
    assert v[~on].max() < 1e-3 * v[on].max()


@pytest.mark.parametrize("chart", ["S", "O", "SH"])
def test_zero_field_gives_zero(chart):
    zero = lambda *x: 0.0 * x[0]
    c = analyze(zero, chart, SMALL)
    assert not np.any(c.values)
    assert plancherel_check(zero, c) == (0.0, 0.0)
    assert synthesize(c, ChartPoint(chart, "hyperboloid", (0.1, 0.2, 0.3, 0.4) if chart != "SH" else (0.1, 0.2, 0.3, 0.4))) == 0


def test_invariant_bump_selects_lowest_label():
    spec = TruncationSpec(cap=4, n_circle=10, rho_max=6.0, n_rho=32)
    c = analyze(gaussian_bump(2.0), "S", spec)
    v = np.abs(c.values)
    low = v[:, 0, 0, spec.cap]
    rest = v.copy()
    rest[:, 0, 0, spec.cap] = 0
    assert rest.max() < 1e-8 * low.max()


def test_synthesis_is_linear(rng):
    c1 = analyze(gaussian_bump(*BUMP_BATTERY[1]), "C", SMALL)
    c2 = analyze(gaussian_bump(*BUMP_BATTERY[2]), "C", SMALL)
    s = 0.7 - 0.2j
    lhs = synthesize_on_grid(c1 + s * c2)
    rhs = synthesize_on_grid(c1) + s * synthesize_on_grid(c2)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_doubling_quadruples_plancherel():
    f = gaussian_bump(2.5, hyperboloid_point(0.25, (1, 0, 0, 0)))
    f2 = lambda *x: 2 * f(*x)
    l1, r1 = plancherel_check(f, analyze(f, "H", SMALL))
    l2, r2 = plancherel_check(f2, analyze(f2, "H", SMALL))
    assert l2 == pytest.approx(4 * l1, rel=1e-14)
    assert r2 == pytest.approx(4 * r1, rel=1e-14)


def test_printed_plancherel_normalization_agrees():
    c = analyze(gaussian_bump(2.0), "O", SMALL)
    assert printed_plancherel_rhs(c) == pytest.approx(c.norm_squared(), rel=1e-12)


def test_projection_is_idempotent():
    spec = TruncationSpec(rho_max=12.0, n_rho=96, cap=6)
    f = gaussian_bump(*BUMP_BATTERY[0])
    c = analyze(f, "S", spec)
    plan = plan_for("S", spec)
    again = plan.analyze(synthesize_on_grid(c) * plan.grid.weights)
    m = c.measure()
    rel = math.sqrt(np.sum(m * np.abs(again - c.values) ** 2) / np.sum(m * np.abs(c.values) ** 2))
    assert rel < 1e-6


def test_pointwise_synthesis_matches_grid():
    c = analyze(gaussian_bump(2.0), "S", SMALL)
    g = plan_for("S", SMALL).grid
    p = g.nodes[:, 777]
    assert abs(synthesize(c, ChartPoint("S", "hyperboloid", tuple(p))) - synthesize_on_grid(c).ravel()[777]) < 1e-12


@pytest.mark.parametrize("chart", ["OC", "OT"])
def test_coefficients_dict_roundtrip(chart):
    spec = TruncationSpec(n_rho=8, cap=2, n_label=10, n_label_ot=6, n_radial=16, n_angle=8, n_circle=8, n_transverse=16)
    c = analyze(gaussian_bump(2.0), chart, spec)
    back = CoefficientSet.from_dict(json.loads(json.dumps(c.to_dict())))
    assert np.array_equal(back.values, c.values)


def test_csv_roundtrip():
    g = build_grid("SH", "hyperboloid", SMALL)
    vals = evaluate_on_grid(gaussian_bump(2.0), g)
    buf = io.StringIO()
    write_grid_csv(buf, g, vals)
    header = buf.getvalue().splitlines()[0]
    assert header == "param1,param2,param3,param4,weight,value_re,value_im"
    buf.seek(0)
    assert np.array_equal(read_grid_csv(buf, g), vals)


def test_value_table_shape_checked():
    g = build_grid("S", "hyperboloid", SMALL)
    with pytest.raises(TransformError):
        evaluate_on_grid(np.zeros(3), g)


# ---------------------------------------------------------------- wave packets and transitions


def test_packet_orthonormality():
    g = build_grid("S", "hyperboloid", TruncationSpec(radius=32.0, n_radial=256, n_angle=8, n_circle=8, cap=2))
    lab = SpectralLabel("S", 1.3, j=2, l=1, m=0)
    p = WavePacket(1.3)
    fp = wave_packet(lab, p, "hyperboloid")
    for center in (1.3, 1.5, 1.8):
        q = WavePacket(center)
        got = inner_product(wave_packet(lab, q, "hyperboloid"), fp, g)
        ref = packet_overlap(p, q)
        assert abs(got - ref) <= 0.02 * abs(ref)


def test_transition_self_overlap():
    grid = build_section_grid("S", TruncationSpec())
    lab = SpectralLabel("S", 1.1, j=2, l=1, m=-1)
    assert abs(transition_coefficients(lab, lab, "cone", grid) - 1) < 1e-2


def test_transition_distinct_discrete_labels():
    grid = build_section_grid("C", TruncationSpec(n_radial=240), extent=12.0)
    labs = [SpectralLabel("C", 0.9, tau=0.4, l=l, m=m) for l in range(3) for m in range(-l, l + 1)]
    t = transition_matrix(labs, labs, "cone", grid)
    off = t - np.diag(np.diag(t))
    assert np.max(np.abs(off)) < 1e-6


def test_transition_needs_equal_rho():
    grid = build_section_grid("S", TruncationSpec())
    with pytest.raises(TransformError):
        transition_coefficients(SpectralLabel("S", 1.0, j=0, l=0, m=0), SpectralLabel("S", 1.2, j=0, l=0, m=0), "cone", grid)


def test_packet_self_overlap_on_cone():
    grid = build_grid("S", "cone", TruncationSpec(radius=30.0, n_radial=200, n_angle=12, n_circle=13))
    lab = SpectralLabel("S", 1.3, j=2, l=1, m=0)
    assert abs(packet_transition(lab, lab, grid, WavePacket(1.3)) - 1) < 1e-2


# ---------------------------------------------------------------- orispherical transform


def _cone_vector(rng, k0):
    d = rng.normal(size=4)
    return np.concatenate([[k0], k0 * d / np.linalg.norm(d)])


def test_gg_invariant_bump_depends_on_k0_only(rng):
    psi = gaussian_bump(2.0)
    for k0 in (0.7, 1.3):
        vals = [gg_transform(psi, _cone_vector(rng, k0)) for _ in range(4)]
        assert max(abs(v - vals[0]) for v in vals) < 1e-6 * abs(vals[0])


def test_gg_closed_form_for_centered_bump():
    # exp(-alpha ([x, e0] - 1)) over the orisphere is a Gaussian integral in the O chart
    alpha = 2.0
    for k0 in (0.6, 1.0, 1.7):
        u = 1 / k0
        ref = math.exp(-alpha * ((u + 1 / u) / 2 - 1)) * (2 * math.pi * u / alpha) ** 1.5
        got = gg_transform(gaussian_bump(alpha), np.array([k0, 0, 0, k0, 0]))
        assert abs(got - ref) < 1e-10 * ref


def test_gg_shift_equivariance(rng):
    psi = gaussian_bump(2.0, hyperboloid_point(0.3, (0.2, 0.5, -0.4, 0.7)))
    for _ in range(3):
        g = random_group_element(rng)
        k = _cone_vector(rng, rng.uniform(0.6, 1.6))
        lhs = gg_transform(translate(psi, g), k)
        rhs = gg_transform(psi, np.linalg.solve(g, k))
        assert abs(lhs - rhs) < 1e-5 * abs(rhs)


def test_gg_zero_and_bad_k():
    assert gg_transform(lambda *x: 0 * x[0], np.array([1.0, 1.0, 0, 0, 0])) == 0
    with pytest.raises(TransformError):
        gg_transform(gaussian_bump(2.0), np.array([1.0, 0.5, 0, 0, 0]))


@given(st.floats(-2.5, -0.05), st.floats(-3, 3))
def test_homogeneous_component_gamma(re, im):
    sigma = complex(re, im)
    kdir = np.array([1.0, 0.0, 0.6, 0.8, 0.0])
    got = homogeneous_component(lambda *x: np.exp(-x[0]), sigma, kdir)
    ref = complex(gamma_complex(-sigma))
    assert abs(got - ref) < 1e-8 * abs(ref)


def test_homogeneous_component_degree(rng):
    c = rng.normal(size=3) * 0.3
    h = lambda *x: (1 + c[0] * x[1] ** 2 / x[0] ** 2) * np.exp(-1.2 * x[0] + c[1] * x[2] + c[2] * x[4])
    k = _cone_vector(rng, 1.0)
    sigma = complex(-0.7, 1.3)
    lhs = homogeneous_component(h, sigma, 2 * k)
    rhs = 2**sigma * homogeneous_component(h, sigma, k)
    assert abs(lhs - rhs) < 1e-8 * abs(rhs)


def test_homogeneous_component_zero_and_strip():
    k = np.array([1.0, 1.0, 0, 0, 0])
    assert homogeneous_component(lambda *x: 0.0, -1.0, k) == 0
    with pytest.raises(TransformError):
        homogeneous_component(lambda *x: np.exp(-x[0]), 0.5, k)

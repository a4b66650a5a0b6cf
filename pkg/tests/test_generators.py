import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from desitter.bases import SpectralLabel, basis_field, eigenvalues
from desitter.charts import ChartId, Surface, chart_map, inverse_map
from desitter.checks import commutator_checks, commutator_table, laplacian_checks, random_field
from desitter.generators import (
    DegeneratePointError,
    GeneratorError,
    JetOrderError,
    ScalarField,
    apply,
    casimir_F,
    casimir_scale,
    casimir_W,
    compose_apply,
    generator_matrix,
    generator_op,
    laplacian,
    subgroup_invariant,
)
from desitter.jets import Jet

P = np.array([[0.3], [0.5], [0.7], [1.1]])


def field(fn, chart, surface="hyperboloid"):
    return ScalarField(lambda p, eps=None: fn(*p), chart, surface)


# ---------------------------------------------------------------- operators


@pytest.mark.parametrize(
    "chart,gen,axis",
    [("H", "M3", 3), ("C", "P0", 1), ("OT", "E1", 1)],
)
def test_single_derivative_generators(chart, gen, axis):
    c = generator_op(chart, "hyperboloid", gen).coeffs(P)
    ref = np.zeros((4, 1))
    ref[axis] = 1.0
    assert np.array_equal(c, ref)


def test_unknown_generator():
    with pytest.raises(ValueError):
        generator_op("S", "hyperboloid", "Q7")


def test_table_source_missing_for_cone_s():
    with pytest.raises(GeneratorError):
        generator_op("S", "cone", "M1", source="table")


@pytest.mark.parametrize("m", [-2, 0, 3])
def test_m3_on_phase(m):
    f = field(lambda a, b, t, ph: np.exp(1j * m * ph) * np.cosh(a), "H")
    got = apply(generator_op("H", "hyperboloid", "M3"), f, P)
    assert abs(got - m * f(P)) < 1e-13 * (1 + abs(m))


def test_p0_on_c_chart_phase():
    tau = 0.7
    f = field(lambda a, b, t, ph: np.exp(1j * tau * b) * np.sin(t), "C")
    got = apply(generator_op("C", "hyperboloid", "P0"), f, P)
    assert abs(got - tau * f(P)) < 1e-14


def _pulled_back(chart, g):
    return ScalarField.from_homogeneous(g, chart, "hyperboloid")


def test_n3_matches_finite_difference(rng):
    # J f = -i d/dt f(exp(t A) x) at t = 0; central difference with step 1e-5
    coef = rng.normal(size=(5, 5))

    def poly(*x):
        return sum(coef[i, j] * x[i] * x[j] for i in range(5) for j in range(5)) + x[1] * x[3]

    f = _pulled_back("H", poly)
    op = generator_op("H", "hyperboloid", "N3")
    a = generator_matrix("N3")
    for _ in range(5):
        p = np.array([rng.uniform(-1, 1), rng.uniform(0.2, 1.5), rng.uniform(0.3, 2.8), rng.uniform(0, 6)])
        x = np.array(chart_map("H", "hyperboloid", p))
        h = 1e-5
        fd = (poly(*(expm(h * a) @ x)) - poly(*(expm(-h * a) @ x))) / (2 * h)
        got = apply(op, f, p.reshape(4, 1))
        assert abs(got - (-1j) * fd) <= 1e-8 * abs(fd)


def test_compose_m3_twice():
    m = 2
    f = field(lambda a, b, t, ph: np.exp(1j * m * ph) * (1 + a * a), "H")
    op = generator_op("H", "hyperboloid", "M3")
    assert abs(compose_apply([op, op], f, P) - m * m * f(P)) < 1e-12


@pytest.mark.parametrize("a,b,expected", [("M1", "M2", ("M3", 1j)), ("P0", "N1", ("P1", 1j))])
def test_named_commutators(a, b, expected, rng):
    f = random_field(rng, "S", "hyperboloid")
    ops = {g: generator_op("S", "hyperboloid", g) for g in (a, b, expected[0])}
    lhs = compose_apply([ops[a], ops[b]], f, P) - compose_apply([ops[b], ops[a]], f, P)
    rhs = expected[1] * apply(ops[expected[0]], f, P)
    assert abs(lhs - rhs) < 1e-10 * (1 + abs(rhs))


def test_commutator_table_has_45_relations():
    table = commutator_table()
    assert len(table) == 45
    assert len({(a, b) for a, b, _ in table}) == 45


@pytest.mark.parametrize("chart,surface", [("OC", "hyperboloid"), ("OT", "hyperboloid"), ("SH", "hyperboloid"), ("S", "cone"), ("C", "cone")])
def test_commutators_other_charts(chart, surface, rng):
    checks = commutator_checks(chart, surface, rng, n_pairs=10)
    assert all(c.passed for c in checks), [c.to_dict() for c in checks if not c.passed]


def test_jet_order_limit():
    f = field(lambda a, b, t, ph: a, "S")
    with pytest.raises(JetOrderError):
        f.jet(P, 5)


def test_degenerate_point_rejected():
    f = field(lambda a, b, t, ph: a, "S")
    with pytest.raises(DegeneratePointError):
        apply(generator_op("S", "hyperboloid", "M1"), f, np.array([[0.5], [1.0], [0.0], [0.3]]))


def test_chart_covariance(rng):
    # the same homogeneous field pulled back to two charts gives one generator value
    coef = rng.normal(size=5)
    g = lambda *x: np.exp(0.3 * sum(c * xi for c, xi in zip(coef, x)))
    p_s = np.array([[0.8], [1.0], [1.2], [2.0]])
    x = np.array(chart_map("S", "hyperboloid", p_s))
    for other in ("H", "O", "OC", "OT", "C", "SH"):
        q, _, _ = inverse_map(other, "hyperboloid", x)
        for gen in ("M1", "P2", "N3", "P0"):
            a = apply(generator_op("S", "hyperboloid", gen), _pulled_back("S", g), p_s)
            b = apply(generator_op(other, "hyperboloid", gen), _pulled_back(other, g), q.reshape(4, 1))
            assert abs(a - b) <= 1e-8 * (1 + abs(a))


# ---------------------------------------------------------------- Casimirs and Laplacians


def test_casimir_f_cone_exponential():
    rho = 1.0
    f = field(lambda a, b, t, ph: np.exp(complex(-1.5, rho) * a) + 0 * t, "S", "cone")
    assert abs(casimir_F(f, P, "S", "cone") - 3.25 * f(P)) < 1e-12


def test_casimir_f_s_basis():
    lab = SpectralLabel("S", 0.5, j=2, l=1, m=1)
    f = basis_field(lab, "hyperboloid")
    got = casimir_F(f, P, "S", "hyperboloid")
    assert abs(got - 2.5 * f(P)) < 1e-10 * abs(f(P))


@pytest.mark.parametrize("chart", list(ChartId))
def test_constant_field_annihilated(chart):
    f = ScalarField(lambda p, eps=None: 3.0 + 0 * p[0], chart, "hyperboloid")
    p = np.array([[0.3], [0.5], [0.7], [1.1]])
    assert abs(casimir_F(f, p, chart, "hyperboloid")) < 1e-12
    assert abs(casimir_W(f, p, chart, "hyperboloid")) < 1e-12


@pytest.mark.parametrize(
    "label",
    [
        SpectralLabel("S", 1.1, j=3, l=2, m=-1),
        SpectralLabel("H", 0.8, nu=0.6, l=1, m=1, eps=-1),
        SpectralLabel("O", 1.4, kappa=0.7, l=2, m=0),
        SpectralLabel("OC", 0.9, eta=0.5, q=-0.4, m=2),
        SpectralLabel("OT", 1.2, kvec=(0.3, -0.5, 0.2)),
        SpectralLabel("C", 1.7, tau=-0.4, l=1, m=0),
        SpectralLabel("SH", 0.6, omega=0.9, mprime=2, m=-1),
    ],
    ids=lambda lab: lab.chart.value,
)
def test_w_annihilates_basis(label):
    f = basis_field(label, "hyperboloid")
    w = casimir_W(f, P, label.chart, "hyperboloid")
    assert abs(w) / casimir_scale(f, P, label.chart, "hyperboloid") < 1e-6


def test_w_on_random_field_is_generically_nonzero(rng):
    # stated expectation: a random field is not class one, so |W f| > 1e-4
    p = np.array([[0.4], [1.0], [1.3], [2.0]])
    f = random_field(rng, "S", "hyperboloid")
    assert abs(casimir_W(f, p, "S", "hyperboloid")) > 1e-4


@pytest.mark.parametrize("chart,surface", [("S", "hyperboloid"), ("H", "hyperboloid"), ("C", "cone"), ("OT", "cone")])
def test_w_vanishes_on_every_scalar_field(chart, surface, rng):
    # every function on the hyperboloid or the cone lies in class-one representations
    p = np.array([[0.4], [1.0], [1.3], [2.0]])
    for _ in range(5):
        f = random_field(rng, chart, surface)
        assert abs(casimir_W(f, p, chart, surface)) / casimir_scale(f, p, chart, surface) < 1e-10


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_cone_laplacian_on_exponential(lr, li):
    lam = complex(lr, li)
    f = field(lambda a, b, t, ph: np.exp(lam * a) + 0 * b, "C", "cone")
    got = laplacian("C", "cone", f, P)
    ref = (lam * lam + 3 * lam) * f(P)
    assert abs(got - ref) <= 1e-10 * (1 + abs(ref))


def test_h_basis_laplacian():
    lab = SpectralLabel("H", 1.0, nu=0.5, l=1, m=0)
    f = basis_field(lab, "hyperboloid")
    assert abs(laplacian("H", "hyperboloid", f, P) + 3.25 * f(P)) < 1e-10 * abs(f(P))


def test_ot_macdonald_field_laplacian():
    lab = SpectralLabel("OT", 1.0, kvec=(0.8, -0.3, 0.5))
    f = basis_field(lab, "hyperboloid")
    assert abs(laplacian("OT", "hyperboloid", f, P) + 3.25 * f(P)) < 1e-10 * abs(f(P))


@pytest.mark.parametrize("chart", list(ChartId))
def test_laplacian_equals_minus_f(chart, rng):
    checks = laplacian_checks(chart, rng, n=20)
    assert all(c.passed for c in checks), [c.to_dict() for c in checks]


def test_m2_on_sph_harm():
    from desitter.specfn import sph_harm

    f = field(lambda a, b, t, ph: sph_harm(3, -2, t, ph) * np.exp(a), "H")
    assert abs(subgroup_invariant("H", "M2", f, P) - 12 * f(P)) < 1e-11


def test_e2_on_o_factor():
    lab = SpectralLabel("O", 1.3, kappa=0.9, l=1, m=1)
    f = basis_field(lab, "hyperboloid")
    assert abs(subgroup_invariant("O", "E2", f, P) - 0.81 * f(P)) < 1e-10 * abs(f(P))


def test_sh_hyperbolic_plane_invariant():
    lab = SpectralLabel("SH", 0.8, omega=0.6, mprime=1, m=2)
    f = basis_field(lab, "hyperboloid")
    assert abs(subgroup_invariant("SH", "H2", f, P) + (0.36 + 0.25) * f(P)) < 1e-10 * abs(f(P))


def test_invariant_not_in_chart():
    f = field(lambda a, b, t, ph: a, "S")
    with pytest.raises(GeneratorError):
        subgroup_invariant("S", "E2", f, P)


# ---------------------------------------------------------------- jets


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_jet_product_rule(x, y):
    a, b = Jet.variables(np.array([x, y, 0.0, 0.0]), 2)[:2]
    f = np.sin(a) * np.exp(b)
    assert abs(float(f.grad(0)) - math.cos(x) * math.exp(y)) < 1e-12 * (1 + math.exp(y))
    assert abs(float(f.grad(1)) - math.sin(x) * math.exp(y)) < 1e-12 * (1 + math.exp(y))

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from desitter.bases import (
    RHO_MIN,
    BasisError,
    SpectralLabel,
    basis_c4,
    basis_h4,
    cone_coefficients,
    cone_limit_match,
    cone_match_residual,
    plancherel_weight,
)
from desitter.charts import ChartId, ChartPoint
from desitter.checks import _discrete_family, eigen_checks, orthogonality_checks, random_label

mpmath.mp.dps = 30


def test_ot_value_at_reference_point():
    # (1 / 2 pi^2) |Gamma(i + 3/2)|^{-1} K_i(1), product of mpmath values
    lab = SpectralLabel("OT", 1.0, kvec=(1.0, 0.0, 0.0))
    v = basis_h4(lab, ChartPoint("OT", "hyperboloid", (0.0, 0.0, 0.0, 0.0)))
    assert abs(abs(v) - 0.0251918015340656424007568042446) < 1e-12


@pytest.mark.parametrize("rho,a", [(0.7, 0.4), (1.9, 1.3), (3.2, 2.5)])
def test_s_lowest_label_structure(rho, a):
    # |Gamma(i rho - 1/2)| / |Gamma(i rho - j - 1/2)| is 1 at j = 0; the rest is
    # sinh^{-1} a P^{-1}_{i rho - 1/2}(cosh a) times the constant Y_000
    lab = SpectralLabel("S", rho, j=0, l=0, m=0)
    radial = mpmath.legenp(mpmath.mpc(-0.5, rho), -1, mpmath.cosh(a), type=3) / mpmath.sinh(a)
    ref = complex(radial) / math.sqrt(2 * math.pi**2)
    for ang in [(0.3, 0.4, 0.5), (2.0, 1.0, 4.0)]:
        v = basis_h4(lab, ChartPoint("S", "hyperboloid", (a, *ang)))
        assert abs(abs(v) - abs(ref)) < 1e-10 * abs(ref)


@pytest.mark.parametrize("chart", ["S", "H", "O", "C"])
def test_phase_factor_symmetry(chart, rng):
    lab = random_label(chart, rng, cap=3)
    if lab.m == 0:
        lab = lab.replace(m=1) if lab.l >= 1 else lab.replace(l=1, m=1, **({"j": max(lab.j, 1)} if chart == "S" else {}))
    neg = lab.replace(m=-lab.m)
    p = (0.6, 1.0, 1.1, 0.8)
    q = (0.6, 1.0, 1.1, -0.8 % (2 * math.pi))
    v = basis_h4(lab, ChartPoint(chart, "hyperboloid", p))
    w = basis_h4(lab, ChartPoint(chart, "hyperboloid", q))
    assert abs(v - w * np.exp(2j * lab.m * 0.8)) < 1e-12 * abs(v)
    assert abs(abs(v) - abs(basis_h4(neg, ChartPoint(chart, "hyperboloid", p)))) < 1e-12 * abs(v)


def test_o_cone_coefficients_formula():
    rho, kappa = 1.3, 0.7
    cp, cm = cone_coefficients(SpectralLabel("O", rho, kappa=kappa, l=1, m=0))
    for s, got in ((1, cp), (-1, cm)):
        ref = (kappa / 2) ** (-s * 1j * rho) * complex(mpmath.gamma(s * 1j * rho)) / (2 * math.sqrt(math.pi) * abs(complex(mpmath.gamma(1.5 + 1j * rho))))
        assert abs(got - ref) < 1e-13 * abs(ref)


def test_s_cone_coefficients_conjugate():
    cp, cm = cone_coefficients(SpectralLabel("S", 1.0, j=2, l=1, m=0))
    assert abs(cp - np.conj(cm)) < 1e-15 * abs(cp)
    lab = SpectralLabel("S", 1.0, j=2, l=0, m=0)
    vals = [basis_c4(lab, ChartPoint("S", "cone", (a, 0.7, 0.3, 0.0))) for a in (-1.0, 0.5, 2.0)]
    assert all(abs(v.imag) < 1e-15 * abs(v) for v in vals)


def test_cone_rejects_small_rho():
    with pytest.raises(BasisError):
        cone_coefficients(SpectralLabel("S", RHO_MIN / 2, j=0, l=0, m=0))


def test_cone_branches_sum():
    lab = SpectralLabel("C", 0.9, tau=0.2, l=1, m=1)
    p = ChartPoint("C", "cone", (0.3, 0.5, 1.0, 2.0))
    both = basis_c4(lab, p)
    assert abs(basis_c4(lab, p, "plus") + basis_c4(lab, p, "minus") - both) < 1e-15 * abs(both)


def test_plancherel_weight_values():
    assert plancherel_weight(SpectralLabel("S", 1.0, j=0, l=0, m=0)) == pytest.approx(1.24534009527593743033086322502, rel=1e-14)
    assert plancherel_weight(SpectralLabel("S", 0.0, j=0, l=0, m=0)) == 0.0
    h1 = plancherel_weight(SpectralLabel("H", 1.3, nu=1.0, l=0, m=0))
    h2 = plancherel_weight(SpectralLabel("H", 1.3, nu=2.0, l=0, m=0))
    assert h2 / h1 == pytest.approx(4.0, rel=1e-14)


def test_cone_match_lowest_label():
    lab = SpectralLabel("S", 1.0, j=0, l=0, m=0)
    assert cone_match_residual(lab, 10.0) < 1e-3
    assert cone_match_residual(lab, 12.0) < cone_match_residual(lab, 10.0)
    hyp, cone = cone_limit_match(lab, 10.0)
    assert abs(hyp - cone) < 1e-3 * abs(hyp)


def test_lowest_cone_coefficient_ratio():
    # asymptotic coefficient Gamma(i rho) / Gamma(i rho + 3/2) times a rho-independent constant
    ratios = []
    for rho in (0.5, 1.0, 2.3):
        cp, _ = cone_coefficients(SpectralLabel("S", rho, j=0, l=0, m=0))
        ratios.append(cp / complex(mpmath.gamma(1j * rho) / mpmath.gamma(1.5 + 1j * rho)))
    assert all(abs(r - math.sqrt(2 / math.pi)) < 1e-13 for r in ratios)


def test_cone_match_needs_s_family():
    with pytest.raises(BasisError):
        cone_match_residual(SpectralLabel("C", 1.0, tau=0.1, l=0, m=0), 10.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(chart="S", rho=1.0, j=1, l=2, m=0),
        dict(chart="S", rho=1.0, j=2, l=1, m=3),
        dict(chart="H", rho=1.0, nu=0.0, l=0, m=0),
        dict(chart="H", rho=1.0, nu=1.0, l=0, m=0, eps=2),
        dict(chart="O", rho=1.0, kappa=-1.0, l=0, m=0),
        dict(chart="OT", rho=1.0, kvec=(0.0, 0.0, 0.0)),
        dict(chart="S", rho=-1.0, j=0, l=0, m=0),
        dict(chart="C", rho=1.0, tau=0.3, l=0, m=0, j=1),
        dict(chart="SH", rho=1.0, omega=0.5, m=0),
    ],
)
def test_label_validation(kwargs):
    with pytest.raises(BasisError):
        SpectralLabel(**kwargs)


@given(st.sampled_from(list(ChartId)), st.integers(0, 2**32 - 1))
def test_label_dict_roundtrip(chart, seed):
    lab = random_label(chart, np.random.default_rng(seed))
    assert SpectralLabel.from_dict(lab.to_dict()) == lab


@pytest.mark.parametrize("chart", list(ChartId))
@pytest.mark.parametrize("surface", ["hyperboloid", "cone"])
def test_eigen_equations(chart, surface, rng):
    checks = eigen_checks(chart, surface, rng, n_labels=3, n_points=10)
    assert all(c.passed for c in checks), [c.to_dict() for c in checks if not c.passed]


@pytest.mark.parametrize("chart", ["H", "O", "OC", "C"])
def test_discrete_orthogonality(chart, rng):
    checks = orthogonality_checks(chart, rng)
    assert checks and all(c.passed for c in checks), [c.to_dict() for c in checks]


def test_discrete_family_shapes(rng):
    assert len(_discrete_family(ChartId.S, rng)) == sum((j + 1) ** 2 for j in range(4))
    assert _discrete_family(ChartId.OT, rng) == []

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from desitter.charts import (
    ChartError,
    ChartId,
    ChartPoint,
    HomogeneousPoint,
    Surface,
    bilinear,
    chart_map,
    density,
    from_homogeneous,
    inverse_map,
    is_degenerate,
    measure_density,
    sample_params,
    to_homogeneous,
)
from desitter.jets import Jet

CHARTS = list(ChartId)
SURFACES = list(Surface)
PAIRS = [(c, s) for c in CHARTS for s in SURFACES]


def test_h_origin():
    x = to_homogeneous(ChartPoint("H", "hyperboloid", (0.0, 0.0, 1.0, 2.0))).x
    assert np.allclose(x, (1, 0, 0, 0, 0), atol=1e-15)


def test_o_origin():
    x = to_homogeneous(ChartPoint("O", "hyperboloid", (0.0, 0.0, 0.4, 0.1))).x
    assert np.allclose(x, (1, 0, 0, 0, 0), atol=1e-15)


def test_h_point_value():
    # (cosh^2 1, cosh 1 sinh 1, 0, 0, sinh 1) from the hyperbolic functions directly
    x = to_homogeneous(ChartPoint("H", "hyperboloid", (1.0, 1.0, math.pi / 2, 0.0))).x
    ref = (math.cosh(1) ** 2, math.cosh(1) * math.sinh(1), 0.0, 0.0, math.sinh(1))
    assert np.allclose(x, ref, rtol=1e-14, atol=1e-14)


def test_out_of_range_parameter():
    with pytest.raises(ChartError):
        ChartPoint("S", "hyperboloid", (1.0, 4.0, 1.0, 1.0))
    with pytest.raises(ChartError):
        ChartPoint("H", "hyperboloid", (1.0, -0.5, 1.0, 1.0))


def test_apex_is_flagged():
    cp = from_homogeneous(HomogeneousPoint((1.0, 0.0, 0.0, 0.0, 0.0), "hyperboloid"), "S")
    assert cp.params[0] == 0.0
    assert cp.degenerate


def test_cone_h_sheet_sign():
    cp = from_homogeneous(HomogeneousPoint((1.0, 0.6, 0.0, 0.0, -0.8), "cone"), "H")
    assert cp.eps == -1
    cp = from_homogeneous(HomogeneousPoint((1.0, 0.6, 0.0, 0.0, 0.8), "cone"), "H")
    assert cp.eps == 1


def test_wrong_surface_rejected():
    with pytest.raises(ChartError):
        from_homogeneous(HomogeneousPoint((2.0, 0.0, 0.0, 0.0, 0.0), "hyperboloid"), "S")


def test_density_values():
    assert measure_density(ChartPoint("H", "hyperboloid", (0.0, 1.0, math.pi / 2, 0.0))) == pytest.approx(math.sinh(1) ** 2, rel=1e-14)
    for a in (-1.0, 0.3, 2.0):
        assert measure_density(ChartPoint("OT", "hyperboloid", (a, 0.4, -1.0, 2.0))) == pytest.approx(math.exp(3 * a), rel=1e-14)
    cp = ChartPoint("S", "hyperboloid", (1.0, 0.0, 1.0, 1.0))
    assert measure_density(cp) == 0.0
    assert is_degenerate(cp)


@pytest.mark.parametrize("chart,surface", PAIRS, ids=[f"{c.value}-{s.value}" for c, s in PAIRS])
def test_quadratic_form_and_roundtrip(chart, surface, rng):
    p = sample_params(chart, surface, 1000, rng)
    eps = np.where(rng.random(1000) < 0.5, 1.0, -1.0) if chart is ChartId.H and surface is Surface.CONE else None
    x = np.array(chart_map(chart, surface, p, eps))
    q = bilinear(x, x)
    assert np.all(x[0] > 0)
    if surface is Surface.HYPERBOLOID:
        assert np.max(np.abs(q - 1.0)) < 1e-12
    else:
        assert np.max(np.abs(q) / (1 + np.sum(x * x, axis=0))) < 1e-12
    p2, eps2, _ = inverse_map(chart, surface, x)
    x2 = np.array(chart_map(chart, surface, p2, eps2))
    assert np.max(np.abs(x2 - x) / (1 + np.abs(x))) < 1e-10


@pytest.mark.parametrize("chart,surface", PAIRS, ids=[f"{c.value}-{s.value}" for c, s in PAIRS])
def test_density_is_jacobian(chart, surface, rng):
    # d^4x / x0 in the coordinates x1..x4: |det d(x1..x4)/dp| / x0
    p = sample_params(chart, surface, 40, rng)
    eps = np.ones(40) if chart is ChartId.H and surface is Surface.CONE else None
    jets = Jet.variables(p, 1)
    x = chart_map(chart, surface, jets, eps)
    jac = np.stack([np.stack([np.asarray(x[i].grad(k)) for k in range(4)], -1) for i in range(1, 5)], -2)
    ref = np.abs(np.linalg.det(jac)) / np.asarray(x[0].value)
    got = density(chart, surface, p)
    assert np.max(np.abs(got - ref) / ref) < 1e-9


@pytest.mark.parametrize("src", CHARTS)
def test_chart_transfer(src, rng):
    p = sample_params(src, "hyperboloid", 50, rng)
    x = np.array(chart_map(src, "hyperboloid", p))
    for dst in CHARTS:
        q, eps, _ = inverse_map(dst, "hyperboloid", x)
        back = np.array(chart_map(dst, "hyperboloid", q, eps))
        assert np.max(np.abs(back - x) / (1 + np.abs(x))) < 1e-10


@given(st.sampled_from(PAIRS), st.integers(0, 2**32 - 1))
def test_roundtrip_through_points(pair, seed):
    chart, surface = pair
    p = sample_params(chart, surface, 1, np.random.default_rng(seed))[:, 0]
    cp = ChartPoint(chart, surface, tuple(p), -1 if chart is ChartId.H and surface is Surface.CONE else None)
    hp = to_homogeneous(cp)
    back = from_homogeneous(hp, chart)
    assert np.allclose(to_homogeneous(back).x, hp.x, rtol=1e-10, atol=1e-10)
    assert ChartPoint.from_json(cp.to_json()) == cp

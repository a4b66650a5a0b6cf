"""Acceptance criteria, one test each, with one PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

from desitter.charts import Surface
from desitter.checks import (
    ALL_CHARTS,
    chart_identity_checks,
    commutator_checks,
    cone_match_checks,
    eigen_checks,
    gg_checks,
    laplacian_checks,
    orthogonality_checks,
    plancherel_checks,
    specfn_checks,
    transition_checks,
)
from desitter.transforms import TruncationSpec

SEED = 20261016


def _chart_identities(rng):
    return chart_identity_checks(rng, 1000)


def _commutators(rng):
    sets = [(c, Surface.HYPERBOLOID) for c in ("S", "H", "O", "C")] + [("H", Surface.CONE)]
    return [chk for chart, surface in sets for chk in commutator_checks(chart, surface, rng, n_pairs=100)]


def _laplacians(rng):
    return [chk for chart in ALL_CHARTS for chk in laplacian_checks(chart, rng, n=50)]


def _eigenfunctions(rng):
    return [chk for surface in Surface for chart in ALL_CHARTS for chk in eigen_checks(chart, surface, rng, n_labels=20, n_points=50)]


def _orthogonality(rng):
    return [chk for chart in ALL_CHARTS for chk in orthogonality_checks(chart, rng)]


def _plancherel(rng):
    spec = TruncationSpec(rho_max=8.0, n_rho=64, cap=6)
    return [chk for chart in ALL_CHARTS for chk in plancherel_checks(chart, spec)]


CRITERIA = [
    ("1 chart identities", _chart_identities, 5.0),
    ("2 commutator suite", _commutators, 60.0),
    ("3 Laplacian consistency", _laplacians, 30.0),
    ("4 eigenfunction certification", _eigenfunctions, 600.0),
    ("5 discrete orthogonality", _orthogonality, 300.0),
    ("6 wave-packet Plancherel", _plancherel, 900.0),
    ("7 cone-hyperboloid matching", lambda rng: cone_match_checks(rng, n=10), 60.0),
    ("8 orispherical transform equivariance", lambda rng: gg_checks(rng, n=20), 300.0),
    ("9 special-function oracles", lambda rng: specfn_checks(n=200, seed=SEED), 120.0),
    ("10 transition unitarity", lambda rng: transition_checks(rng), 300.0),
]


def evaluate(name, run, budget):
    """Run one criterion; returns (ok, status line)."""
    start = time.perf_counter()
    checks = run(np.random.default_rng(SEED))
    elapsed = time.perf_counter() - start
    failed = [c for c in checks if not c.passed]
    worst = max((c.residual / c.tol for c in checks), default=0.0)
    ok = bool(checks) and not failed and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'}  criterion {name}: {len(checks) - len(failed)}/{len(checks)} checks, worst residual/tol {worst:.2e}, {elapsed:.1f}s (limit {budget:.0f}s)"
    if failed:
        line += f"; first failure {failed[0].name} residual {failed[0].residual:.3e} tol {failed[0].tol:.0e}"
    return ok, line


@pytest.mark.parametrize("name, run, budget", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, run, budget, capsys):
    ok, line = evaluate(name, run, budget)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    all_ok = True
    for criterion in CRITERIA:
        ok, line = evaluate(*criterion)
        print(line, flush=True)
        all_ok &= ok
    sys.exit(0 if all_ok else 1)

"""Acceptance criteria, one test function (possibly parametrized) per criterion.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``;
either prints one ``CRITERION i PASS/FAIL`` line per criterion.
"""

import sys
import time

import numpy as np
import pytest

from polybend.bending import BendingSystem, enumerate_triangulations
from polybend.fibers import certify_isotropy, classify_fiber
from polybend.grassmann import TwoFrame, gc_pattern
from polybend.verify import (
    fan_grid,
    fiber_checks,
    suite_flow,
    suite_gc,
    suite_grassmann,
    suite_isotropy,
    suite_poisson,
)

NS = [4, 5, 6, 7, 8]
CATALAN = {4: 2, 5: 5, 6: 14, 7: 42, 8: 132}

# side-length vectors for the fiber grids: equilateral, non-generic and generic
GRID_R = {
    4: [(1, 1, 1, 1), (1, 1, 1, 2), (1, 2, 2, 1), (1.0, 1.3, 0.9, 1.1)],
    5: [(1, 1, 1, 1, 1), (1, 1, 1, 1, 2), (1, 1, 2, 2, 2), (1.0, 1.3, 0.9, 1.1, 1.2)],
}

# hand-built fibers: (r, diagonals, c, expected (p, q, k, type, dim_quotient, lagrangian))
HAND_BUILT = {
    "square regular": ((1,) * 4, None, (1.0,), (1, 1, 0, "I", 1, True)),
    "square lined": ((1,) * 4, None, (2.0,), (0, 0, 1, "II", 0, False)),
    "square wedge of digons": ((1,) * 4, None, (0.0,), (0, 0, 2, "II", 1, False)),
    "pentagon wedge digon+triangle": ((1,) * 5, None, (0.0, 0.5), (1, 0, 1, "I", 2, True)),
    "pentagon lined triangle": ((1,) * 5, None, (2.0, 0.5 * 1.5**2), (1, 1, 0, "I", 1, False)),
    "hexagon wedge of triangles": ((1,) * 6, None, (0.5, 0.0, 0.5), (2, 0, 0, "I", 3, True)),
    "hexagon wedge of digons": ((1,) * 6, None, (0.0, 0.5, 0.0), (0, 0, 3, "II", 3, False)),
    "hexagon snake lined": ((1,) * 6, [(2, 6), (2, 5), (3, 5)], (2.0, 0.5 * 1.5**2, 0.5), None),
}


# -- 1. commutation --------------------------------------------------------------------


def test_criterion_01_poisson_commutation():
    start = time.perf_counter()
    for n in NS:
        assert len(enumerate_triangulations(n)) == CATALAN[n]
        rep = suite_poisson(n, samples=1000, seed=2024)
        assert rep.extra["triangulations"] == CATALAN[n]
        assert rep.passed, rep.to_json()
        assert rep.checks[0].max_value < 1e-9
        # the control pairs really are non-commuting
        assert rep.extra["crossing_control_median"] > 1e-3
    assert time.perf_counter() - start < 60


# -- 2-3. flows and action-angle coordinates --------------------------------------------


@pytest.fixture(scope="module")
def flow_reports():
    return {n: suite_flow(n, samples=200, seed=2024) for n in NS}


def _check(rep, name):
    return next(c for c in rep.checks if name in c.name)


@pytest.mark.parametrize("n", NS)
def test_criterion_02_flow_exactness(flow_reports, n):
    rep = flow_reports[n]
    for name, bound in (("F drift", 1e-10), ("closing", 1e-12), ("flow^(2 pi)", 1e-10)):
        chk = _check(rep, name)
        assert chk.count >= 200, name
        assert chk.max_value < bound, chk.to_json()


@pytest.mark.parametrize("n", NS)
def test_criterion_03_action_angle(flow_reports, n):
    rep = flow_reports[n]
    for name in ("theta_k", "theta_p", "l drift"):
        chk = _check(rep, name)
        assert chk.count >= 200, name
        assert chk.max_value < 1e-8, chk.to_json()


# -- 4-7. fibers --------------------------------------------------------------------------


def _grid_cases():
    for n, rs in GRID_R.items():
        for r in rs:
            for tri in enumerate_triangulations(n):
                yield pytest.param(n, r, tri, id=f"n{n}-r{'_'.join(map(str, r))}-{tri}")


@pytest.fixture(scope="module")
def grid_reports():
    cache = {}

    def get(n, r, tri):
        key = (n, r, tri)
        if key not in cache:
            cache[key] = suite_isotropy(n, grid=9, samples=20, seed=7, r=r, diags=tri)
        return cache[key]

    return get


def _mismatches(rep, prefix):
    return _check(rep, prefix)


@pytest.fixture(scope="module")
def hand_built_checks():
    out = {}
    for name, (r, diags, c, _) in HAND_BUILT.items():
        sys_ = BendingSystem.create(np.array(r, float), diags)
        out[name] = (sys_, c, fiber_checks(sys_, c, samples=20, seed=11))
    return out


@pytest.mark.parametrize("n, r, tri", list(_grid_cases()))
def test_criterion_04_singularity_criterion(grid_reports, n, r, tri):
    rep = grid_reports(n, r, tri)
    assert rep.extra["fibers"] >= 9
    chk = _mismatches(rep, "singular flag")
    assert chk.count == rep.extra["fibers"]
    assert chk.passed, chk.to_json()


@pytest.mark.parametrize("n, r, tri", list(_grid_cases()))
def test_criterion_05_fiber_structure_on_grids(grid_reports, n, r, tri):
    rep = grid_reports(n, r, tri)
    chk = _mismatches(rep, "dim_total")
    assert chk.passed, chk.to_json()


def test_criterion_05_fiber_structure_hand_built(hand_built_checks):
    for name, (sys_, c, res) in hand_built_checks.items():
        assert res["rank_mismatch"] == 0, (name, res["ranks"], res["model"].dim_total)
        assert len(res["ranks"]) == 20
        expected = HAND_BUILT[name][3]
        if expected is not None:
            m = res["model"]
            assert (m.p, m.q, m.k, m.type, m.dim_quotient, m.lagrangian) == expected, name


@pytest.mark.parametrize("n, r, tri", list(_grid_cases()))
def test_criterion_06_isotropy_on_grids(grid_reports, n, r, tri):
    rep = grid_reports(n, r, tri)
    chk = _check(rep, "max normalized")
    assert chk.passed and chk.max_value < 1e-8, chk.to_json()


def test_criterion_06_isotropy_hand_built(hand_built_checks):
    singular = 0
    for name, (sys_, c, res) in hand_built_checks.items():
        if not res["singular"]:
            continue
        singular += 1
        rep = certify_isotropy(sys_, c, samples=20, seed=13)
        assert rep.samples == 20
        assert rep.passed and rep.max_omega < 1e-8, (name, rep.max_omega)
    assert singular >= 6


@pytest.mark.parametrize("n, r, tri", list(_grid_cases()))
def test_criterion_07_lagrangian_on_grids(grid_reports, n, r, tri):
    rep = grid_reports(n, r, tri)
    for prefix in ("lagrangian flag", "dim_quotient"):
        chk = _mismatches(rep, prefix)
        assert chk.passed, chk.to_json()


def test_criterion_07_lagrangian_hand_built(hand_built_checks):
    for name, (sys_, c, res) in hand_built_checks.items():
        m = res["model"]
        assert m.lagrangian == (m.dim_quotient == sys_.n - 3 and m.type == "I"), name
        assert res["lagrangian_mismatch"] == 0, name
        assert res["quotient_mismatch"] == 0, name
    # positive and negative cases are both present
    hexa = hand_built_checks["hexagon wedge of triangles"][2]["model"]
    assert hexa.lagrangian and (hexa.p, hexa.q, hexa.k, hexa.dim_quotient) == (2, 0, 0, 3)
    assert hand_built_checks["square regular"][2]["model"].lagrangian
    assert not hand_built_checks["pentagon lined triangle"][2]["model"].lagrangian


# -- 8-10. Grassmannian picture -----------------------------------------------------------


@pytest.mark.parametrize("n", NS)
def test_criterion_08_grassmann_relation(n):
    rep = suite_grassmann(n, samples=1000, seed=2024)
    assert rep.passed, rep.to_json()
    names = [c.name for c in rep.checks]
    assert any("caterpillar" in x for x in names)
    if n >= 5:
        assert any("snake" in x for x in names)
    for c in rep.checks:
        assert c.count == 1000
        bound = 1e-10 if c.name.startswith("relation") else 1e-12
        if c.name.startswith(("|perimeter", "closing")):
            assert c.max_value < bound, c.to_json()
        if c.name.startswith("relation"):
            assert c.max_value < bound, c.to_json()


@pytest.mark.parametrize("n", NS)
def test_criterion_09_gc_ladder(n):
    rep = suite_gc(n, samples=1000, seed=2024, grid=3)
    for c in rep.checks:
        if c.name.startswith("gc ") or c.name.startswith("prefix"):
            assert c.count == 1000
            assert c.max_value < 1e-10, c.to_json()


def test_criterion_09_worked_example():
    f = TwoFrame.validated([0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, -0.5])
    p = gc_pattern(f)
    assert abs(p.value(1, 1) - 0.25) < 1e-12
    assert abs(p.value(1, 2) - 0.25) < 1e-12 and abs(p.value(2, 2) - 0.25) < 1e-12
    assert abs(p.value(1, 4) - 0.5) < 1e-12 and abs(p.value(2, 4) - 0.5) < 1e-12


DIAMOND_R = {
    4: [(1, 1, 1, 1), (0.5, 0.5, 0.5, 0.5), (1, 2, 2, 1)],
    5: [(1, 1, 1, 1, 1), (1, 1, 1, 1, 2), (1.0, 1.3, 0.9, 1.1, 1.2)],
    6: [(1, 1, 1, 1, 1, 1), (1, 1, 2, 1, 1, 2), (1.0, 1.3, 0.9, 1.1, 1.2, 0.8)],
}


@pytest.mark.parametrize("n, r", [(n, r) for n, rs in DIAMOND_R.items() for r in rs])
def test_criterion_10_diamond_equivalence(n, r):
    rep = suite_gc(n, samples=0, grid=9, r=r)
    chk = _check(rep, "diamond flags")
    assert chk.count == rep.extra["fibers"] >= 9
    assert chk.passed, chk.to_json()
    if len(set(r)) == 1:
        # equal sides: the grid contains fibers with vanishing diagonals
        sys_ = BendingSystem.create(np.array(r, float))
        assert any(classify_fiber(sys_, c).vanishing for c in fan_grid(sys_, 9))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

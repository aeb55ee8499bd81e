import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybend.bending import BendingSystem, bending_field
from polybend.errors import ClosingViolation, InvalidIndex, NonUnitEdge, TangencyViolation
from polybend.geom import Rotation, random_rotation
from polybend.polyspace import (
    align_canonical,
    diagonal,
    horizontal_project,
    is_generic,
    metric,
    omega,
    orbit_basis,
    orbit_tangent,
    polygon_from_json,
    polygon_to_json,
    stratum_of,
    validate_polygon,
)
from polybend.verify import random_polygon

E1, E2, E3 = np.eye(3)
SQUARE = validate_polygon([E1, E2, -E1, -E2], [1, 1, 1, 1])
LINED = validate_polygon([E1, -E1, E1, -E1], [1, 1, 1, 1])


def random_tangent(u, rng):
    """A tangent vector built as a random combination of bending and rotation fields."""
    n = u.n
    X = sum(rng.standard_normal() * orbit_tangent(u, e) for e in np.eye(3))
    for i in range(1, n + 1):
        for j in range(i + 2, n + 1):
            if (i, j) != (1, n):
                d = diagonal(u, (i, j))
                Y = np.zeros_like(u.u)
                Y[i - 1 : j - 1] = np.cross(d, u.u[i - 1 : j - 1])
                X = X + rng.standard_normal() * Y
    return X


def brute_generic(r):
    """Oracle: enumerate every sign vector explicitly."""
    r = list(r)
    return all(abs(sum(s * x for s, x in zip(signs, r))) > 1e-12 * sum(r)
               for signs in itertools.product((1, -1), repeat=len(r)))


def test_square_and_lined_are_valid():
    assert stratum_of(SQUARE).tag == "Nondegenerate"
    s = stratum_of(LINED)
    assert s.degenerate and np.allclose(abs(s.direction @ E1), 1)


def test_closing_violation():
    with pytest.raises(ClosingViolation):
        validate_polygon([E1, E2, E3], [1, 1, 1])


def test_non_unit_edge_and_renormalization():
    with pytest.raises(NonUnitEdge):
        validate_polygon([1.1 * E1, E2, -E1, -E2], [1, 1, 1, 1])
    u = validate_polygon([(1 + 5e-10) * E1, E2, -E1, -E2], [1, 1, 1, 1])
    assert np.allclose(np.linalg.norm(u.u, axis=1), 1, atol=1e-15)


def test_diagonal_examples():
    assert np.allclose(diagonal(SQUARE, (1, 3)), [1, 1, 0])
    assert np.allclose(diagonal(SQUARE, (3, 1)), -diagonal(SQUARE, (1, 3)))
    assert np.allclose(diagonal(LINED, (1, 3)), 0)
    with pytest.raises(InvalidIndex):
        diagonal(SQUARE, (1, 5))


@pytest.mark.parametrize("r, expected", [((1, 1, 1, 1), False), ((1, 2, 4), True)])
def test_is_generic_examples(r, expected):
    assert is_generic(r) is expected
    assert brute_generic(r) is expected


def test_is_generic_odd_total_is_generic():
    # 1 + 1 + 1 + 2 = 5 is odd, so no signed sum of these integers can vanish
    assert brute_generic((1, 1, 1, 2)) is True
    assert is_generic((1, 1, 1, 2)) is True


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=3, max_size=9))
def test_is_generic_matches_brute_force(r):
    assert is_generic(r) == brute_generic(r)


def test_omega_antisymmetry_and_orbit_pairing():
    rng = np.random.default_rng(3)
    for _ in range(100):
        u = random_polygon(int(rng.integers(4, 9)), rng)
        X, Y = random_tangent(u, rng), random_tangent(u, rng)
        assert omega(u, X, X) == pytest.approx(0, abs=1e-14)
        assert omega(u, X, Y) == pytest.approx(-omega(u, Y, X), abs=1e-12)
        Z = orbit_tangent(u, rng.standard_normal(3))
        assert abs(omega(u, Z, X)) < 1e-10


def test_square_crossing_bracket_matches_finite_difference():
    # perturb the square out of the plane so the crossing bracket is nonzero
    u = align_canonical(random_polygon(4, np.random.default_rng(11)))
    sys13 = BendingSystem.create(u.r, [(1, 3)])
    sys24 = BendingSystem.create(u.r, [(2, 4)])
    X13, X24 = bending_field(sys13, u, 0), bending_field(sys24, u, 0)
    value = omega(u, X13, X24)

    from polybend.bending import flow, momentum_F

    h = 1e-5
    plus = momentum_F(sys24, flow(sys13, u, 0, h))[0]
    minus = momentum_F(sys24, flow(sys13, u, 0, -h))[0]
    derivative = (plus - minus) / (2 * h)
    # dF_{24}(X_{13}) = omega(X_{24}, X_{13})
    assert abs(derivative - (-value)) < 1e-7
    assert abs(value) > 1e-3


def test_tangency_violation():
    with pytest.raises(TangencyViolation):
        omega(SQUARE, np.tile(E1, (4, 1)), np.zeros((4, 3)))


def test_orbit_tangent_examples():
    assert np.array_equal(orbit_tangent(SQUARE, np.zeros(3)), np.zeros((4, 3)))
    assert np.allclose(orbit_tangent(LINED, E1), 0)
    assert np.allclose(orbit_tangent(SQUARE, E3), [[0, 1, 0], [-1, 0, 0], [0, -1, 0], [1, 0, 0]])


def gram_schmidt_horizontal(u, X):
    """Oracle: subtract the metric-orthogonal projection onto an orthonormalized orbit basis."""
    basis = []
    for B in orbit_basis(u):
        for Q in basis:
            B = B - metric(u, B, Q) * Q
        nrm = np.sqrt(metric(u, B, B))
        if nrm > 1e-12:
            basis.append(B / nrm)
    for Q in basis:
        X = X - metric(u, X, Q) * Q
    return X


def test_horizontal_projection():
    rng = np.random.default_rng(5)
    for _ in range(50):
        u = random_polygon(5, rng)
        X = random_tangent(u, rng)
        H = horizontal_project(u, X)
        assert np.allclose(H, gram_schmidt_horizontal(u, X), atol=1e-10)
        for B in orbit_basis(u):
            assert abs(metric(u, H, B)) < 1e-10
        assert np.allclose(horizontal_project(u, H), H, atol=1e-10)
        assert np.allclose(horizontal_project(u, orbit_tangent(u, rng.standard_normal(3))), 0, atol=1e-10)


def test_align_canonical():
    assert np.allclose(align_canonical(SQUARE).u, SQUARE.u, atol=1e-15)
    rng = np.random.default_rng(2)
    for _ in range(20):
        R = random_rotation(rng)
        assert np.allclose(align_canonical(SQUARE.rotated(R)).u, SQUARE.u, atol=1e-10)
        u = random_polygon(6, rng)
        a, b = align_canonical(u), align_canonical(u.rotated(R))
        assert np.allclose(a.u, b.u, atol=1e-10)
        assert abs(a.closing_defect() - u.closing_defect()) < 1e-12
    lined = align_canonical(LINED.rotated(random_rotation(rng)))
    assert np.allclose(lined.u, LINED.u, atol=1e-12)


def test_near_lined_is_nondegenerate():
    eps = 1e-6
    v = np.array([[1.0, eps, 0], [-1.0, eps, 0], [-1.0, -eps, 0], [1.0, -eps, 0]])
    v /= np.linalg.norm(v, axis=1)[:, None]
    assert stratum_of(validate_polygon(v, [1, 1, 1, 1])).tag == "Nondegenerate"


def test_degenerate_stratum_rotation_invariant_and_fixed_vectors():
    rng = np.random.default_rng(9)
    R = random_rotation(rng)
    assert stratum_of(LINED.rotated(R)).degenerate
    lined = LINED.rotated(R)
    axis = lined.u[0]
    X = random_tangent(lined, rng)
    # average of R_s X over the axial rotations
    angles = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    avg = sum(Rotation.from_axis_angle(axis, a).apply(X) for a in angles) / len(angles)
    assert np.abs(avg).max() < 1e-9


def test_json_round_trip():
    text = json.dumps(polygon_to_json(SQUARE))
    back = polygon_from_json(json.loads(text))
    assert np.array_equal(back.u, SQUARE.u) and np.array_equal(back.r, SQUARE.r)

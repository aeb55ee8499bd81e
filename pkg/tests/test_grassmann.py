import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybend.bending import BendingSystem, enumerate_triangulations, momentum_F, snake
from polybend.errors import (
    DegenerateNormalization,
    ImproperPolygon,
    NotAFrame,
    PartialSumNonzero,
)
from polybend.fibers import classify_fiber
from polybend.geom import I_UNIT, Quaternion
from polybend.grassmann import (
    TwoFrame,
    act_quaternion,
    check_relation,
    fiber_graph,
    frame_edges,
    frame_from_json,
    frame_to_json,
    frame_to_polygon,
    gc_identity_residuals,
    gc_pattern,
    phi_quat,
    psi_diagonal,
    psi_side,
    random_frame,
    restrict_frame,
    split_frame,
)

EXAMPLE = TwoFrame.validated([0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, -0.5])


def quaternion_phi(z, w):
    """Oracle: conj(q) i q by explicit quaternion products, q = z + w j."""
    q = Quaternion(z.real, z.imag, w.real, w.imag)
    return (q.conjugate() * I_UNIT * q).as_array()


def rank2_matrix(f):
    return 0.5 * (np.outer(f.z, f.z.conj()) + np.outer(f.w, f.w.conj()))


@pytest.mark.parametrize(
    "z, w, expected", [(1, 0, (1, 0, 0)), (0.5, 0.5, (0, 0, 0.5)), (0, 1, (-1, 0, 0))]
)
def test_phi_examples(z, w, expected):
    assert np.allclose(phi_quat(z, w), expected, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_phi_matches_quaternion_products(z, w):
    out = quaternion_phi(z, w)
    assert abs(out[0]) < 1e-12 * (1 + abs(z) ** 2 + abs(w) ** 2)
    assert np.allclose(phi_quat(z, w), out[1:], atol=1e-12 * (1 + abs(z) ** 2 + abs(w) ** 2))
    assert np.linalg.norm(phi_quat(z, w)) == pytest.approx(abs(z) ** 2 + abs(w) ** 2, abs=1e-9)


def test_example_frame_polygon():
    u = frame_to_polygon(EXAMPLE)
    assert np.allclose(frame_edges(EXAMPLE), [[0, 0, 0.5], [0, 0, -0.5], [0, 0, 0.5], [0, 0, -0.5]])
    assert np.allclose(u.r, 0.5)
    assert u.closing_defect() < 1e-15


def test_not_a_frame_and_improper_polygon():
    with pytest.raises(NotAFrame):
        TwoFrame.validated([1, 0], [1, 0])
    with pytest.raises(NotAFrame):
        TwoFrame.validated([1, 0, 0], [0, 1])
    f = TwoFrame.validated([1, 0, 0], [0, 1, 0])
    with pytest.raises(ImproperPolygon) as exc:
        frame_to_polygon(f)
    assert exc.value.indices == (3,)
    assert psi_side(f, 3) == 0


def test_random_frames_give_closed_polygons_of_perimeter_two():
    rng = np.random.default_rng(0)
    for n in range(4, 9):
        for _ in range(50):
            f = random_frame(n, rng)
            u = frame_to_polygon(f)
            assert abs(u.r.sum() - 2) < 1e-12
            assert u.closing_defect() < 1e-12


def test_phase_action_preserves_side_lengths():
    rng = np.random.default_rng(1)
    f = random_frame(6, rng)
    ph = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))
    g = TwoFrame(f.z * ph, f.w * ph)
    assert np.allclose(frame_to_polygon(g).r, frame_to_polygon(f).r, atol=1e-14)


def test_quaternion_action_rotates_polygon():
    rng = np.random.default_rng(2)
    f = random_frame(5, rng)
    P = Quaternion(*rng.standard_normal(4)).normalized()
    g = act_quaternion(f, P)
    # the action preserves the frame conditions and rotates every edge the same way
    TwoFrame.validated(g.z, g.w, tol=1e-12)
    e, eg = frame_edges(f), frame_edges(g)
    R, *_ = np.linalg.lstsq(e, eg, rcond=None)
    assert np.allclose(e @ R, eg, atol=1e-12)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-10)
    assert np.allclose(momentum_F(BendingSystem.create(frame_to_polygon(f).r), frame_to_polygon(g)),
                       momentum_F(BendingSystem.create(frame_to_polygon(f).r), frame_to_polygon(f)), atol=1e-12)


def test_psi_examples():
    assert psi_side(EXAMPLE, 1) == pytest.approx(0.25)
    assert psi_diagonal(EXAMPLE, range(1, 5)) == pytest.approx((0.5, 0.5))
    assert psi_diagonal(EXAMPLE, [1, 2]) == pytest.approx((0.25, 0.25))
    rng = np.random.default_rng(3)
    f = random_frame(5, rng)
    l1, l2 = psi_diagonal(f, [2])
    assert l1 == pytest.approx(psi_side(f, 2)) and l2 == pytest.approx(0, abs=1e-15)
    assert psi_diagonal(f, range(1, 6)) == pytest.approx((0.5, 0.5), abs=1e-12)


def test_psi_diagonal_matches_block_eigenvalues():
    rng = np.random.default_rng(4)
    for _ in range(30):
        f = random_frame(7, rng)
        I = sorted(rng.choice(np.arange(1, 8), size=int(rng.integers(2, 7)), replace=False).tolist())
        M = rank2_matrix(f)[np.ix_(np.array(I) - 1, np.array(I) - 1)]
        ev = np.sort(np.linalg.eigvalsh(M))[::-1]
        assert np.allclose(psi_diagonal(f, I), ev[:2], atol=1e-12)


def test_relation_examples():
    assert check_relation(EXAMPLE)[0] == pytest.approx(0, abs=1e-15)
    rng = np.random.default_rng(5)
    for n in range(4, 9):
        for tri in enumerate_triangulations(n)[:5] + [snake(n).diags]:
            f = random_frame(n, rng)
            assert check_relation(f, BendingSystem.create(frame_to_polygon(f).r, tri)).max() < 1e-10


def test_split_frame_example_and_errors():
    s = split_frame(EXAMPLE, [1, 2])
    assert s.left.n == 2 and s.right.n == 2
    for part in (s.left, s.right):
        assert abs(np.linalg.norm(part.z) - 1) < 1e-12 and abs(np.vdot(part.z, part.w)) < 1e-12
    with pytest.raises(DegenerateNormalization):
        split_frame(EXAMPLE, [1, 2, 3, 4])
    with pytest.raises(PartialSumNonzero):
        split_frame(random_frame(5, np.random.default_rng(6)), [1, 2])


def test_split_frame_at_vanishing_diagonal_of_generic_frame():
    # a hexagon whose first three edges close up: glue two random triangle frames
    rng = np.random.default_rng(7)
    a, b = random_frame(3, rng), random_frame(3, rng)
    s2 = np.sqrt(0.5)
    f = TwoFrame.validated(np.concatenate([a.z, b.z * 0]) * s2 + np.concatenate([a.z * 0, b.z]) * s2,
                           np.concatenate([a.w, b.w * 0]) * s2 + np.concatenate([a.w * 0, b.w]) * s2)
    s = split_frame(f, [1, 2, 3])
    assert np.allclose(frame_edges(s.left), frame_edges(a), atol=1e-12)
    assert np.allclose(frame_edges(s.right), frame_edges(b), atol=1e-12)


def test_restrict_frame_drops_zero_coordinates_only():
    f = TwoFrame.validated([1, 0, 0], [0, 1, 0])
    g, dropped, small = restrict_frame(f)
    assert g.n == 2 and dropped == (3,) and small == ()


def test_gc_example_and_saturation():
    p = gc_pattern(EXAMPLE)
    assert p.value(1, 1) == pytest.approx(0.25)
    assert (p.value(1, 2), p.value(2, 2)) == pytest.approx((0.25, 0.25))
    assert (p.value(1, 4), p.value(2, 4)) == pytest.approx((0.5, 0.5))
    f = TwoFrame.validated([0.6, 0.8j, 0, 0, 0], [0.8, -0.6j, 0, 0, 0])
    q = gc_pattern(f)
    for k in range(2, 6):
        assert q.mu[k - 1] == pytest.approx(q.mu[1])


def test_gc_matches_leading_block_eigenvalues_and_interlaces():
    rng = np.random.default_rng(8)
    for n in range(4, 9):
        f = random_frame(n, rng)
        p = gc_pattern(f)
        M = rank2_matrix(f)
        for k in range(1, n + 1):
            ev = np.sort(np.linalg.eigvalsh(M[:k, :k]))[::-1]
            assert np.allclose(p.mu[k - 1, :k], ev, atol=1e-12)
        assert p.interlacing_defect() <= 1e-12
        assert max(gc_identity_residuals(f).values()) < 1e-10


def test_fiber_graph_example():
    g = fiber_graph([0.5] * 4, [0.0])
    assert g.diamonds == (1,)
    assert g.values[(1, 2)] == g.values[(2, 2)] == pytest.approx(0.25)
    assert g.to_json()["diamonds"] == [0]
    assert "diamond D_1" in g.to_dot()


def test_fiber_graph_regular_fiber_has_no_diamonds():
    r = [0.5] * 5
    g = fiber_graph(r, [0.5 * 0.7**2, 0.5 * 0.6**2])
    assert g.diamonds == ()
    assert not classify_fiber(BendingSystem.create(r), [0.5 * 0.7**2, 0.5 * 0.6**2]).singular
    # the top row is always filled
    assert ((1, 5), (1, 4)) not in g.edges or g.values[(1, 4)] == g.values[(1, 5)]
    assert g.values[(1, 5)] == g.values[(2, 5)] == pytest.approx(sum(r) / 4)


def test_fiber_graph_values_agree_with_frame_ladder():
    rng = np.random.default_rng(9)
    for n in range(4, 8):
        f = random_frame(n, rng)
        u = frame_to_polygon(f)
        sys = BendingSystem.create(u.r)
        g = fiber_graph(u.r, momentum_F(sys, u))
        p = gc_pattern(f)
        for (i, k), v in g.values.items():
            assert abs(p.value(i, k) - v) < 1e-10


def test_frame_json_round_trip():
    f = random_frame(5, np.random.default_rng(10))
    back = frame_from_json(json.loads(json.dumps(frame_to_json(f))))
    assert np.array_equal(back.z, f.z) and np.array_equal(back.w, f.w)
    with pytest.raises(NotAFrame):
        frame_from_json({"n": 2, "z": [[1, 0], [0, 0]], "w": [[1, 0], [0, 0]]})

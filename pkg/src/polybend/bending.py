"""Bending systems defined by maximal families of non-crossing diagonals.

A system is a side-length vector ``r`` together with ``n - 3`` pairwise
non-crossing diagonals of the convex ``n``-gon, i.e. a triangulation.  Its
momentum map is ``F_k(u) = |d_k(u)|^2 / 2`` and the flow of ``F_k`` rigidly
rotates the edges ``i, ..., j - 1`` about the diagonal ``d_k = d_{i,j}``.

Diagonals are 1-based vertex pairs ``(i, j)`` with ``i < j``; the index ``k``
of a diagonal inside a system is its 0-based position in ``sys.diags``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    CrossingDiagonals,
    DiagonalError,
    InfeasibleFiber,
    InvalidIndex,
    SideNotDiagonal,
    SingularPoint,
    WrongCount,
    ZeroDiagonal,
)
from .geom import Rotation, perpendicular, random_rotation, random_unit_vector
from .polyspace import Polygon, align_canonical, side_lengths, vertices

__all__ = [
    "DiagonalSet",
    "BendingSystem",
    "ActionAngle",
    "validate_diagonals",
    "caterpillar",
    "snake",
    "enumerate_triangulations",
    "chords_cross",
    "momentum_F",
    "bending_field",
    "inverse_bending_field",
    "chord_field",
    "flow",
    "poisson_bracket",
    "chord_bracket",
    "action_angle",
    "build_polygon",
    "sample_fiber",
    "face_status_from_lengths",
    "diagonal_set_to_json",
    "diagonal_set_from_json",
]

Chord = tuple[int, int]
Face = tuple[int, int, int]

NONDEGENERATE = "Nondegenerate"
COLLINEAR = "DegenerateCollinear"
ZERO_SIDE = "HasZeroDiagonalSide"


def chords_cross(a: Chord, b: Chord) -> bool:
    """Strict interleaving of two chords of a convex polygon."""
    i, j = sorted(a)
    p, q = sorted(b)
    return (i < p < j < q) or (p < i < q < j)


@lru_cache(maxsize=None)
def _triangulations(a: int, b: int) -> tuple[tuple[Chord, ...], ...]:
    if b - a < 2:
        return ((),)
    out = []
    for m in range(a + 1, b):
        own = tuple(c for c in ((a, m), (m, b)) if c[1] - c[0] >= 2)
        for left in _triangulations(a, m):
            for right in _triangulations(m, b):
                out.append(left + right + own)
    return tuple(out)


def enumerate_triangulations(n: int) -> list[tuple[Chord, ...]]:
    """Every maximal non-crossing diagonal family of the convex ``n``-gon."""
    return [tuple(sorted(t)) for t in _triangulations(1, n)]


@dataclass(frozen=True)
class DiagonalSet:
    n: int
    diags: tuple[Chord, ...]
    faces: tuple[Face, ...]

    def __len__(self) -> int:
        return len(self.diags)


def _normalize_chord(n: int, c) -> Chord:
    i, j = (int(x) for x in c)
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise InvalidIndex(f"diagonal {tuple(c)} out of range for n = {n}")
    if i > j:
        i, j = j, i
    if j - i < 2 or (i, j) == (1, n):
        raise SideNotDiagonal(f"({i}, {j}) is a side of the {n}-gon, not a diagonal")
    return (i, j)


def _faces_of(n: int, diags) -> tuple[Face, ...]:
    chords = {(i, i + 1) for i in range(1, n)} | {(1, n)} | set(diags)
    adj: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
    for a, b in chords:
        adj[a].add(b)
        adj[b].add(a)
    faces = []
    for a in range(1, n + 1):
        for b in sorted(x for x in adj[a] if x > a):
            for c in sorted(x for x in adj[b] if x > b):
                if c in adj[a]:
                    faces.append((a, b, c))
    return tuple(faces)


def validate_diagonals(n: int, diags) -> DiagonalSet:
    if n < 4:
        raise WrongCount(f"bending systems need n >= 4 (got n = {n})")
    norm = tuple(_normalize_chord(n, c) for c in diags)
    if len(set(norm)) != len(norm):
        raise WrongCount(f"duplicate diagonals in {list(norm)}")
    if len(norm) != n - 3:
        raise WrongCount(f"a maximal family has n - 3 = {n - 3} diagonals, got {len(norm)}")
    for x in range(len(norm)):
        for y in range(x + 1, len(norm)):
            if chords_cross(norm[x], norm[y]):
                raise CrossingDiagonals(f"diagonals {norm[x]} and {norm[y]} cross")
    faces = _faces_of(n, norm)
    assert len(faces) == n - 2, faces
    return DiagonalSet(n, norm, faces)


def caterpillar(n: int) -> DiagonalSet:
    """Fan triangulation: all diagonals ``(1, k)`` from the first vertex."""
    return validate_diagonals(n, [(1, k) for k in range(3, n)])


def snake(n: int) -> DiagonalSet:
    """Zig-zag triangulation ``(2, n), (2, n-1), (3, n-1), (3, n-2), ...``."""
    out, lo, hi = [], 2, n
    while len(out) < n - 3:
        out.append((lo, hi))
        if len(out) % 2:
            hi -= 1
        else:
            lo += 1
    return validate_diagonals(n, out)


@dataclass(frozen=True, eq=False)
class BendingSystem:
    r: np.ndarray
    diagonal_set: DiagonalSet

    def __post_init__(self):
        r = side_lengths(self.r)
        if r.size != self.diagonal_set.n:
            raise ValueError(f"{r.size} side lengths for an {self.diagonal_set.n}-gon system")
        object.__setattr__(self, "r", r)

    @classmethod
    def create(cls, r, diags=None) -> "BendingSystem":
        r = side_lengths(r)
        ds = caterpillar(r.size) if diags is None else (
            diags if isinstance(diags, DiagonalSet) else validate_diagonals(r.size, diags)
        )
        return cls(r, ds)

    @property
    def n(self) -> int:
        return self.diagonal_set.n

    @property
    def diags(self) -> tuple[Chord, ...]:
        return self.diagonal_set.diags

    @property
    def faces(self) -> tuple[Face, ...]:
        return self.diagonal_set.faces

    @cached_property
    def diag_index(self) -> dict[Chord, int]:
        return {d: k for k, d in enumerate(self.diags)}

    def side_index(self, chord: Chord) -> int | None:
        """1-based edge number for a side chord, ``None`` for a diagonal."""
        a, b = chord
        if b == a + 1:
            return a
        if (a, b) == (1, self.n):
            return self.n
        return None

    @staticmethod
    def face_chords(face: Face) -> tuple[Chord, Chord, Chord]:
        a, b, c = face
        return ((a, b), (b, c), (a, c))

    @cached_property
    def chord_faces(self) -> dict[Chord, tuple[Face, ...]]:
        out: dict[Chord, list[Face]] = {}
        for f in self.faces:
            for ch in self.face_chords(f):
                out.setdefault(ch, []).append(f)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def root_face(self) -> Face:
        # the face carrying side (n, 1) is unique in a triangulation
        return self.chord_faces[(1, self.n)][0]

    @cached_property
    def tree_order(self) -> tuple[tuple[Face, Face | None, Chord | None], ...]:
        """Breadth-first ``(face, parent, hinge)`` list over the dual tree."""
        order = [(self.root_face, None, None)]
        seen = {self.root_face}
        queue = deque([self.root_face])
        while queue:
            f = queue.popleft()
            for ch in self.face_chords(f):
                if ch not in self.diag_index:
                    continue
                for g in self.chord_faces[ch]:
                    if g not in seen:
                        seen.add(g)
                        order.append((g, f, ch))
                        queue.append(g)
        return tuple(order)

    def inner_outer_faces(self, k: int) -> tuple[Face, Face]:
        """The two faces hinged on diagonal ``k``: the one inside ``[i, j]`` first."""
        i, j = self.diags[k]
        f, g = self.chord_faces[(i, j)]
        inner = f if all(i <= v <= j for v in f) else g
        return inner, (g if inner is f else f)

    def chord_lengths(self, ell) -> dict[Chord, float]:
        out = {(i, i + 1): float(self.r[i - 1]) for i in range(1, self.n)}
        out[(1, self.n)] = float(self.r[-1])
        for k, d in enumerate(self.diags):
            out[d] = float(ell[k])
        return out

    def face_lengths(self, ell) -> dict[Face, tuple[float, float, float]]:
        L = self.chord_lengths(ell)
        return {f: tuple(L[ch] for ch in self.face_chords(f)) for f in self.faces}

    def __repr__(self) -> str:
        return f"BendingSystem(r={self.r.tolist()}, diags={list(self.diags)})"


def _check_index(sys: BendingSystem, k: int) -> tuple[int, int]:
    if not 0 <= k < len(sys.diags):
        raise InvalidIndex(f"diagonal index {k} out of range 0..{len(sys.diags) - 1}")
    return sys.diags[k]


def _check_polygon(sys: BendingSystem, u: Polygon) -> None:
    if u.n != sys.n or not np.allclose(u.r, sys.r, rtol=1e-12, atol=0):
        raise ValueError(f"polygon side lengths {u.r.tolist()} do not match the system {sys.r.tolist()}")


def face_status_from_lengths(lengths, scale: float, tol: float = DEFAULT.equality) -> str:
    """Classify a triangle from its side lengths; raise when infeasible.

    ``lengths`` is ordered like :meth:`BendingSystem.face_chords`.
    """
    x = np.asarray(lengths, dtype=float)
    band = tol * scale
    if np.any(x <= band):
        if x.max() - (x.sum() - x.max()) > band:
            raise InfeasibleFiber(f"face with side lengths {x.tolist()} cannot close")
        return ZERO_SIDE
    gap = x.sum() - 2.0 * x.max()
    if gap < -band:
        raise InfeasibleFiber(f"triangle inequality violated by side lengths {x.tolist()}")
    return COLLINEAR if gap <= band else NONDEGENERATE


def fiber_lengths(c) -> np.ndarray:
    """Diagonal lengths ``l = sqrt(2 F)`` from momentum values."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise InfeasibleFiber(f"momentum values must be nonnegative: {c.tolist()}")
    return np.sqrt(2.0 * c)


def face_table(sys: BendingSystem, c, tol: Tolerances = DEFAULT) -> dict[Face, tuple[str, tuple[float, float, float]]]:
    """Status and side lengths of every adapted face on the fiber ``F = c``."""
    ell = fiber_lengths(c)
    if ell.size != len(sys.diags):
        raise ValueError(f"expected {len(sys.diags)} momentum values, got {ell.size}")
    out = {}
    scale = float(sys.r.sum())
    for f, lens in sys.face_lengths(ell).items():
        try:
            out[f] = (face_status_from_lengths(lens, scale, tol.equality), lens)
        except InfeasibleFiber as exc:
            raise InfeasibleFiber(f"face {f}: {exc}", face=f) from None
    return out


# -- momentum map and vector fields ----------------------------------------------------


def momentum_F(sys: BendingSystem, u: Polygon) -> np.ndarray:
    _check_polygon(sys, u)
    e = u.edges
    return np.array([0.5 * float(np.sum(e[i - 1 : j - 1].sum(axis=0) ** 2)) for i, j in sys.diags])


def chord_field(u: Polygon, chord: Chord) -> np.ndarray:
    """Bending field of any chord ``(i, j)``, ``i < j``: ``d x u^m`` on edges ``i..j-1``."""
    i, j = chord
    X = np.zeros_like(u.u)
    d = u.edges[i - 1 : j - 1].sum(axis=0)
    X[i - 1 : j - 1] = np.cross(d, u.u[i - 1 : j - 1])
    return X


def bending_field(sys: BendingSystem, u: Polygon, k: int) -> np.ndarray:
    return chord_field(u, _check_index(sys, k))


def inverse_bending_field(sys: BendingSystem, u: Polygon, k: int) -> np.ndarray:
    i, j = _check_index(sys, k)
    d = u.edges[i - 1 : j - 1].sum(axis=0)
    X = -np.cross(d, u.u)
    X[i - 1 : j - 1] = 0.0
    return X


def chord_bracket(u: Polygon, a: Chord, b: Chord) -> float:
    """``omega(X_a, X_b)`` for two arbitrary chords (crossing ones included)."""
    Xa, Xb = chord_field(u, a), chord_field(u, b)
    return float(u.r @ np.einsum("ij,ij->i", u.u, np.cross(Xa, Xb)))


def poisson_bracket(sys: BendingSystem, u: Polygon, k: int, m: int) -> float:
    if k == m:
        _check_index(sys, k)
        return 0.0
    return chord_bracket(u, _check_index(sys, k), _check_index(sys, m))


def flow(sys: BendingSystem, u: Polygon, k: int, t: float, normalized: bool = False,
         tol: Tolerances = DEFAULT) -> Polygon:
    """Exact bending flow along diagonal ``k`` for time ``t``.

    The Hamiltonian flow of ``F_k`` rotates by ``t * |d_k|``; the normalized
    flow (Hamiltonian flow of ``|d_k|``) rotates by ``t``.
    """
    i, j = _check_index(sys, k)
    if t == 0:
        return u
    d = u.edges[i - 1 : j - 1].sum(axis=0)
    length = float(np.linalg.norm(d))
    if length <= tol.equality * float(u.r.sum()):
        if normalized:
            raise ZeroDiagonal(f"diagonal {sys.diags[k]} vanishes; normalized flow undefined")
        return u
    rot = Rotation.from_axis_angle(d / length, t if normalized else t * length)
    new = np.array(u.u)
    new[i - 1 : j - 1] = rot.apply(new[i - 1 : j - 1])
    return Polygon(new, u.r)


# -- action-angle coordinates ---------------------------------------------------------


@dataclass(frozen=True)
class ActionAngle:
    ell: np.ndarray
    theta: np.ndarray = field(repr=True)


def _perp_unit(v: np.ndarray, axis: np.ndarray) -> np.ndarray:
    w = v - (v @ axis) * axis
    return w / np.linalg.norm(w)


def _apex(sys: BendingSystem, face: Face, chord: Chord) -> int:
    return next(v for v in face if v not in chord)


def check_regular(sys: BendingSystem, u: Polygon, tol: Tolerances = DEFAULT) -> None:
    P = vertices(u)
    scale = float(u.r.sum())
    for k, (i, j) in enumerate(sys.diags):
        if np.linalg.norm(P[j - 1] - P[i - 1]) <= tol.equality * scale:
            raise SingularPoint(f"diagonal {(i, j)} vanishes")
    for a, b, c in sys.faces:
        area2 = np.linalg.norm(np.cross(P[b - 1] - P[a - 1], P[c - 1] - P[a - 1]))
        if area2 <= tol.equality * scale**2:
            raise SingularPoint(f"adapted face {(a, b, c)} is degenerate")


def action_angle(sys: BendingSystem, u: Polygon, tol: Tolerances = DEFAULT) -> ActionAngle:
    """Diagonal lengths and dihedral angles at a regular point.

    ``theta_k`` is the angle, about the oriented diagonal ``d_k``, from the
    reflected outer face to the inner face; it vanishes on planar polygons and
    the normalized flow along ``d_k`` adds ``t`` to it.
    """
    _check_polygon(sys, u)
    check_regular(sys, u, tol)
    P = vertices(u)
    ell = np.sqrt(2.0 * momentum_F(sys, u))
    theta = np.empty(len(sys.diags))
    for k, (i, j) in enumerate(sys.diags):
        inner, outer = sys.inner_outer_faces(k)
        axis = P[j - 1] - P[i - 1]
        axis /= np.linalg.norm(axis)
        w_in = _perp_unit(P[_apex(sys, inner, (i, j)) - 1] - P[i - 1], axis)
        base = -_perp_unit(P[_apex(sys, outer, (i, j)) - 1] - P[i - 1], axis)
        theta[k] = math.atan2(float(np.cross(base, w_in) @ axis), float(base @ w_in)) % (2 * math.pi)
    return ActionAngle(ell, theta)


# -- fiber construction ---------------------------------------------------------------


def _place_vertices(sys: BendingSystem, c, theta, rng: np.random.Generator | None,
                    tol: Tolerances = DEFAULT) -> np.ndarray:
    """Vertex positions of a polygon on the fiber ``F = c``.

    Faces are laid out along the dual tree from the root face; each child
    face is hinged on its parent by ``theta`` of the shared diagonal.
    Degenerate configurations are placed exactly from the arithmetic face
    statuses, never from rounded square roots.
    """
    table = face_table(sys, c, tol)
    ell = fiber_lengths(c)
    L = sys.chord_lengths(ell)
    theta = np.asarray(theta, dtype=float)
    n = sys.n
    P: dict[int, np.ndarray] = {1: np.zeros(3), n: np.array([float(sys.r[-1]), 0.0, 0.0])}

    def place(a: int, b: int, x: int, status: str, base: np.ndarray, angle: float) -> np.ndarray:
        e = P[b] - P[a]
        Lab = L[(a, b)]
        if status == ZERO_SIDE and Lab <= tol.equality * sys.r.sum():
            if rng is not None:
                direction = random_unit_vector(rng)
            else:
                b2 = np.cross(base, perpendicular(base))
                direction = math.cos(angle) * perpendicular(base) + math.sin(angle) * b2
            return P[a] + L[tuple(sorted((a, x)))] * direction
        axis = e / np.linalg.norm(e)
        xa, xb = L[tuple(sorted((a, x)))], L[tuple(sorted((b, x)))]
        s = (xa * xa - xb * xb + Lab * Lab) / (2.0 * Lab)
        if status != NONDEGENERATE:
            return P[a] + s * axis
        h = math.sqrt(max(xa * xa - s * s, 0.0))
        return P[a] + s * axis + h * (math.cos(angle) * base + math.sin(angle) * np.cross(axis, base))

    root = sys.root_face
    m = _apex(sys, root, (1, n))
    P[m] = place(1, n, m, table[root][0], np.array([0.0, 1.0, 0.0]), 0.0)
    for face, parent, hinge in sys.tree_order[1:]:
        a, b = hinge
        x = _apex(sys, face, hinge)
        y = _apex(sys, parent, hinge)
        e = P[b] - P[a]
        norm_e = np.linalg.norm(e)
        if norm_e > 0 and table[parent][0] == NONDEGENERATE:
            base = -_perp_unit(P[y] - P[a], e / norm_e)
        elif norm_e > 0:
            base = perpendicular(e / norm_e)
        else:
            v = P[y] - P[a]
            base = v / np.linalg.norm(v) if np.linalg.norm(v) > 0 else np.array([1.0, 0.0, 0.0])
        status = table[face][0]
        if L[hinge] <= tol.equality * sys.r.sum():
            status = ZERO_SIDE
        P[x] = place(a, b, x, status, base, float(theta[sys.diag_index[hinge]]))
    return np.stack([P[v] for v in range(1, n + 1)])


def _polygon_from_vertices(sys: BendingSystem, P: np.ndarray) -> Polygon:
    e = np.roll(P, -1, axis=0) - P
    u = e / sys.r[:, None]
    return Polygon(u / np.linalg.norm(u, axis=1)[:, None], sys.r)


def build_polygon(sys: BendingSystem, c, theta, tol: Tolerances = DEFAULT) -> Polygon:
    """Canonical polygon with momentum ``c`` and dihedral angles ``theta``."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (len(sys.diags),))
    P = _place_vertices(sys, c, theta, None, tol)
    return align_canonical(_polygon_from_vertices(sys, P), tol)


def sample_fiber(sys: BendingSystem, c, count: int, seed: int = 0,
                 tol: Tolerances = DEFAULT) -> list[Polygon]:
    """``count`` random polygons of the fiber ``F = c``.

    Sample ``idx`` draws from the stream ``default_rng([seed, idx])``: uniform
    hinge angles, uniform directions for pieces hanging on vanishing
    diagonals and a Haar-random global rotation.
    """
    face_table(sys, c, tol)
    out = []
    for idx in range(int(count)):
        rng = np.random.default_rng([int(seed), idx])
        theta = rng.uniform(0.0, 2 * math.pi, len(sys.diags))
        P = _place_vertices(sys, c, theta, rng, tol)
        out.append(_polygon_from_vertices(sys, P).rotated(random_rotation(rng)))
    return out


# -- JSON wire format (0-based) -------------------------------------------------------


def diagonal_set_to_json(ds: DiagonalSet) -> dict:
    return {"n": ds.n, "diagonals": [[i - 1, j - 1] for i, j in ds.diags]}


def diagonal_set_from_json(obj: dict) -> DiagonalSet:
    try:
        n = int(obj["n"])
        diags = [(int(i) + 1, int(j) + 1) for i, j in obj["diagonals"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DiagonalError(f"malformed diagonal set JSON: {exc}") from None
    return validate_diagonals(n, diags)

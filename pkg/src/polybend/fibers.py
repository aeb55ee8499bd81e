"""Singular fibers of bending systems.

Fiber-level data (face statuses, vanishing diagonals, the homogeneous model)
is computed from the side lengths ``r`` and momentum values ``c`` alone: the
side lengths of every adapted face are constant on a fiber.  Sampled polygons
are only used to certify the classification through tangent-space ranks and
the vanishing of the symplectic form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bending import (
    COLLINEAR,
    NONDEGENERATE,
    ZERO_SIDE,
    BendingSystem,
    Face,
    bending_field,
    face_table,
    fiber_lengths,
    momentum_F,
    sample_fiber,
)
from .config import DEFAULT, Tolerances
from .errors import (
    ContractViolation,
    DiagonalNotVanishing,
    FaceNotDegenerate,
    InvalidIndex,
    NotInDenseSet,
    NotOnFiber,
    ZeroDiagonal,
)
from .geom import Rotation, perpendicular
from .polyspace import Polygon, chord_vector, horizontal_project, omega, side_lengths, vertices

__all__ = [
    "FaceStatus",
    "PieceModel",
    "WedgePiece",
    "FiberModel",
    "IsotropyReport",
    "face_statuses",
    "is_singular_fiber",
    "vanishing_diagonals",
    "wedge_pieces",
    "classify_fiber",
    "tangent_generators",
    "numerical_rank",
    "horizontal_rank",
    "certify_isotropy",
    "perturb_open_face",
    "perturb_vanishing_diagonal",
    "fiber_model_to_json",
]

SPHERE, RIGID, RIGID_TORUS = "Sphere", "Rigid", "RigidTorus"


@dataclass(frozen=True)
class FaceStatus:
    face: Face
    status: str
    lengths: tuple[float, float, float]
    dependence: tuple[float, float, float] | None = None  # alpha with sum alpha_i d_i = 0

    @property
    def degenerate(self) -> bool:
        return self.status != NONDEGENERATE


def _dependence(lengths) -> tuple[float, float, float]:
    """Coefficients ``alpha`` of ``sum alpha_m v_m = 0`` for the unit directions
    ``v`` of the face vectors ``d_ab, d_bc, d_ac`` of a collinear face."""
    x_ab, x_bc, x_ac = (float(v) for v in lengths)
    return (x_ab, x_bc, -x_ac)


def face_statuses(sys: BendingSystem, c, tol: Tolerances = DEFAULT) -> list[FaceStatus]:
    table = face_table(sys, c, tol)
    out = []
    for f in sys.faces:
        status, lens = table[f]
        out.append(FaceStatus(f, status, lens, _dependence(lens) if status == COLLINEAR else None))
    return out


def is_singular_fiber(sys: BendingSystem, c, tol: Tolerances = DEFAULT) -> bool:
    return any(s.degenerate for s in face_statuses(sys, c, tol))


def vanishing_diagonals(sys: BendingSystem, c, tol: Tolerances = DEFAULT) -> list[int]:
    face_table(sys, c, tol)
    ell = fiber_lengths(c)
    band = tol.equality * float(sys.r.sum())
    return [k for k in range(len(sys.diags)) if ell[k] <= band]


# -- classification -------------------------------------------------------------------


@dataclass(frozen=True)
class PieceModel:
    kind: str
    m: int = 0

    @property
    def dim(self) -> int:
        return 2 if self.kind == SPHERE else 3 + self.m

    @staticmethod
    def rigid_torus(m: int) -> "PieceModel":
        return PieceModel(RIGID if m == 0 else RIGID_TORUS, m)


@dataclass(frozen=True)
class WedgePiece:
    edges: tuple[int, ...]  # 1-based edge numbers
    faces: tuple[Face, ...]
    model: PieceModel


@dataclass(frozen=True)
class FiberModel:
    n: int
    p: int
    q: int
    k: int
    type: str
    lagrangian: bool
    dim_total: int
    dim_quotient: int
    pieces: tuple[WedgePiece, ...]
    vanishing: tuple[int, ...]
    singular: bool
    boundary_cases: tuple[str, ...] = field(default=())

    @property
    def corollary_lagrangian(self) -> bool:
        """Half-dimensionality of the quotient regardless of fiber type.

        Wedges of digons are type II fibers whose nondegenerate stratum has
        dimension ``n - 3``; this flag reports them, :attr:`lagrangian` does not.
        """
        return self.dim_quotient == self.n - 3


def _regions(sys: BendingSystem, zero: set[int]) -> list[list[Face]]:
    """Components of the dual tree once the edges across vanishing diagonals are cut."""
    parent = {f: f for f in sys.faces}

    def find(f):
        while parent[f] != f:
            parent[f] = parent[parent[f]]
            f = parent[f]
        return f

    for k, d in enumerate(sys.diags):
        if k in zero:
            continue
        a, b = sys.chord_faces[d]
        parent[find(a)] = find(b)
    groups: dict[Face, list[Face]] = {}
    for f in sys.faces:
        groups.setdefault(find(f), []).append(f)
    return sorted(groups.values())


def _classify_piece(faces: frozenset, links: dict, statuses: dict) -> PieceModel:
    """Model of the space of sub-polygons spanned by the real faces ``faces``.

    ``links[f]`` lists, per side of ``f``, the neighboring real face or
    ``None`` when that side is a side of the sub-polygon.
    """
    if not faces:
        return PieceModel(SPHERE)
    degenerate = sorted(f for f in faces if statuses[f] == COLLINEAR)
    if not degenerate:
        return PieceModel.rigid_torus(len(faces) - 1)
    f0 = degenerate[0]
    subs = []
    for nb in links[f0]:
        if nb is None or nb not in faces:
            subs.append(PieceModel(SPHERE))  # a digon: one side and its copy
            continue
        comp, stack = {nb}, [nb]
        while stack:
            g = stack.pop()
            for h in links[g]:
                if h is not None and h != f0 and h in faces and h not in comp:
                    comp.add(h)
                    stack.append(h)
        subs.append(_classify_piece(frozenset(comp), links, statuses))
    solid = [s for s in subs if s.kind != SPHERE]
    if not solid:
        return PieceModel(SPHERE)
    return PieceModel.rigid_torus(sum(s.m for s in solid) + len(solid) - 1)


def _real_links(sys: BendingSystem, statuses: dict, zero_chords: set) -> dict:
    """Adjacency between faces with no vanishing side.

    Crossing a nonzero diagonal into a face ``(0, x, x)`` continues through
    its other nonzero side; reaching a polygon side ends the link.
    """
    links = {}
    for f in sys.faces:
        if statuses[f] == ZERO_SIDE:
            continue
        out = []
        for ch in sys.face_chords(f):
            cur_face, cur_chord = f, ch
            while True:
                if cur_chord not in sys.diag_index:
                    out.append(None)
                    break
                g = next(h for h in sys.chord_faces[cur_chord] if h != cur_face)
                if statuses[g] != ZERO_SIDE:
                    out.append(g)
                    break
                cur_face = g
                cur_chord = next(x for x in sys.face_chords(g) if x != cur_chord and x not in zero_chords)
        links[f] = tuple(out)
    return links


def wedge_pieces(sys: BendingSystem, c, tol: Tolerances = DEFAULT) -> list[WedgePiece]:
    table = face_table(sys, c, tol)
    statuses = {f: s for f, (s, _) in table.items()}
    zero = set(vanishing_diagonals(sys, c, tol))
    zero_chords = {sys.diags[k] for k in zero}
    links = _real_links(sys, statuses, zero_chords)
    pieces = []
    for region in _regions(sys, zero):
        edges = sorted(
            {e for f in region for ch in sys.face_chords(f) if (e := sys.side_index(ch)) is not None}
        )
        if not edges:
            continue  # a face whose three sides all vanish carries no edge
        real = frozenset(f for f in region if statuses[f] != ZERO_SIDE)
        pieces.append(WedgePiece(tuple(edges), tuple(sorted(real)), _classify_piece(real, links, statuses)))
    return pieces


def classify_fiber(sys: BendingSystem, c, tol: Tolerances = DEFAULT) -> FiberModel:
    table = face_table(sys, c, tol)
    pieces = wedge_pieces(sys, c, tol)
    vanishing = tuple(vanishing_diagonals(sys, c, tol))
    p = sum(1 for pc in pieces if pc.model.kind != SPHERE)
    q = sum(pc.model.m for pc in pieces)
    k = len(pieces) - p
    dim_total = 3 * p + q + 2 * k
    if p >= 1:
        kind, dim_quotient = "I", 3 * (p - 1) + q + 2 * k
    else:
        kind, dim_quotient = "II", (2 * k - 3 if k >= 2 else 0)
    n = sys.n
    singular = any(s != NONDEGENERATE for s, _ in table.values())

    # values inside the tolerance band that are not exact equalities
    boundary = []
    band = tol.equality * float(sys.r.sum())
    for f, (status, lens) in table.items():
        x = np.asarray(lens)
        if status == COLLINEAR and x.sum() - 2 * x.max() != 0.0:
            boundary.append(f"face {f}: triangle equality within {abs(x.sum() - 2 * x.max()):.3e}")
    ell = fiber_lengths(c)
    for kk in vanishing:
        if ell[kk] != 0.0:
            boundary.append(f"diagonal {sys.diags[kk]}: length {ell[kk]:.3e} <= {band:.3e}")
    return FiberModel(
        n=n, p=p, q=q, k=k, type=kind,
        lagrangian=(kind == "I" and dim_quotient == n - 3),
        dim_total=dim_total, dim_quotient=dim_quotient,
        pieces=tuple(pieces), vanishing=vanishing, singular=singular,
        boundary_cases=tuple(boundary),
    )


def fiber_model_to_json(model: FiberModel) -> dict:
    return {
        "p": model.p,
        "q": model.q,
        "k": model.k,
        "type": model.type,
        "lagrangian": model.lagrangian,
        "dim_total": model.dim_total,
        "dim_quotient": model.dim_quotient,
        "pieces": [
            {"edges": [e - 1 for e in pc.edges], "kind": pc.model.kind, "m": pc.model.m}
            for pc in model.pieces
        ],
        "singular": model.singular,
        "vanishing_diagonals": list(model.vanishing),
        "corollary_lagrangian": model.corollary_lagrangian,
        "boundary_cases": list(model.boundary_cases),
    }


# -- tangent generators and ranks -----------------------------------------------------


def _check_on_fiber(sys: BendingSystem, u: Polygon, c, tol: Tolerances) -> np.ndarray:
    measured = momentum_F(sys, u)
    if c is None:
        return measured
    c = np.asarray(c, dtype=float)
    scale = float(sys.r.sum()) ** 2
    if c.shape != measured.shape or np.abs(measured - c).max(initial=0.0) > 1e-8 * scale:
        raise NotOnFiber(f"polygon has F = {measured.tolist()}, expected {c.tolist()}")
    return c


def tangent_generators(sys: BendingSystem, u: Polygon, c=None, tol: Tolerances = DEFAULT) -> list[np.ndarray]:
    """Bending fields plus rotations of every wedge piece about the three axes.

    ``c`` defaults to the fiber through ``u``.
    """
    c = _check_on_fiber(sys, u, c, tol)
    gens = [bending_field(sys, u, k) for k in range(len(sys.diags))]
    for piece in wedge_pieces(sys, c, tol):
        idx = np.array(piece.edges) - 1
        for e in np.eye(3):
            Y = np.zeros_like(u.u)
            Y[idx] = np.cross(e, u.u[idx])
            gens.append(Y)
    return gens


def numerical_rank(fields, r, tol: Tolerances = DEFAULT) -> int:
    """Rank of tangent vectors for the metric ``sum r_i <X^i, Y^i>``."""
    if len(fields) == 0:
        return 0
    w = np.sqrt(np.asarray(r, dtype=float))[:, None]
    A = np.stack([(np.asarray(X) * w).reshape(-1) for X in fields])
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol.rank * s[0]))


def horizontal_rank(u: Polygon, fields, tol: Tolerances = DEFAULT, scale: float | None = None) -> int:
    """Rank of the horizontal projections of ``fields``.

    Singular values are compared with ``tol.rank * scale``; by default the
    scale is the largest singular value of the unprojected family, so
    directions that project to (numerically) nothing do not count.
    """
    if len(fields) == 0:
        return 0
    w = np.sqrt(u.r)[:, None]
    raw = np.stack([(np.asarray(X) * w).reshape(-1) for X in fields])
    hor = np.stack([(horizontal_project(u, X) * w).reshape(-1) for X in fields])
    ref = np.linalg.svd(raw, compute_uv=False)[0] if scale is None else scale
    if ref == 0:
        return 0
    s = np.linalg.svd(hor, compute_uv=False)
    return int(np.sum(s > tol.rank * ref))


@dataclass(frozen=True)
class IsotropyReport:
    passed: bool
    max_omega: float
    per_sample: tuple[float, ...]
    ranks: tuple[int, ...]
    dim_total: int
    seed: int
    samples: int

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "max_omega": self.max_omega,
            "per_sample": list(self.per_sample),
            "ranks": list(self.ranks),
            "dim_total": self.dim_total,
            "seed": self.seed,
            "samples": self.samples,
        }


def max_normalized_omega(u: Polygon, fields) -> float:
    """Largest ``|omega|`` between generators rescaled to unit metric length."""
    unit = []
    for X in fields:
        nrm = float(np.sqrt(u.r @ np.einsum("ij,ij->i", X, X)))
        if nrm > 1e-12 * float(u.r.sum()):
            unit.append(X / nrm)
    worst = 0.0
    for a in range(len(unit)):
        for b in range(a + 1, len(unit)):
            worst = max(worst, abs(omega(u, unit[a], unit[b], check=False)))
    return worst


def certify_isotropy(sys: BendingSystem, c, samples: int = 20, seed: int = 0,
                     tol: Tolerances = DEFAULT, polygons=None) -> IsotropyReport:
    """Evaluate the symplectic form on the tangent generators at sampled points."""
    model = classify_fiber(sys, c, tol)
    polys = sample_fiber(sys, c, samples, seed, tol) if polygons is None else polygons
    per, ranks = [], []
    for u in polys:
        gens = tangent_generators(sys, u, c, tol)
        per.append(max_normalized_omega(u, gens))
        ranks.append(numerical_rank(gens, u.r, tol))
    worst = max(per, default=0.0)
    return IsotropyReport(worst < tol.isotropy, worst, tuple(per), tuple(ranks), model.dim_total, int(seed), len(polys))


# -- approximation constructions ------------------------------------------------------


def _measured_face_status(u: Polygon, face: Face, tol: Tolerances) -> str:
    from .bending import face_status_from_lengths

    a, b, cc = face
    lens = [np.linalg.norm(chord_vector(u, x, y)) for x, y in ((a, b), (b, cc), (a, cc))]
    return face_status_from_lengths(lens, float(u.r.sum()), tol.equality)


def perturb_open_face(sys: BendingSystem, u: Polygon, face: Face, t: float, x=None,
                      tol: Tolerances = DEFAULT) -> tuple[Polygon, np.ndarray]:
    """Open a collinear face by moving its middle vertex ``j`` by ``t x``.

    Edges ``j - 1`` and ``j`` become ``(r_{j-1} u^{j-1} + t x)`` and
    ``(r_j u^j - t x)``, renormalized; their lengths are the new side lengths.
    ``x`` must be a unit vector orthogonal to ``d_{i,j}``.
    """
    face = tuple(sorted(int(v) for v in face))
    if face not in sys.faces:
        raise InvalidIndex(f"{face} is not an adapted face of {list(sys.diags)}")
    status = _measured_face_status(u, face, tol)
    if status == NONDEGENERATE:
        raise FaceNotDegenerate(f"face {face} is not degenerate")
    if status == ZERO_SIDE:
        raise ZeroDiagonal(f"face {face} has a vanishing side")
    i, j, _ = face
    d = chord_vector(u, i, j)
    d_hat = d / np.linalg.norm(d)
    if x is None:
        x = perpendicular(d_hat)
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) > tol.unit or abs(x @ d_hat) > tol.unit:
        raise ContractViolation("x must be a unit vector orthogonal to d_{i,j}")
    if t == 0:
        return u, u.r
    e = u.edges.copy()
    a, b = j - 2, (j - 1) % u.n  # 0-based rows of edges j-1 and j
    e[a] += t * x
    e[b] -= t * x
    r_new = np.linalg.norm(e, axis=1)
    r_new = side_lengths(r_new)
    return Polygon(e / r_new[:, None], r_new), r_new


def _walk_to_k2(sys: BendingSystem, k: int, zero_chords: set) -> tuple[int, int, int]:
    a, b = sys.diags[k]
    inner, outer = sys.inner_outer_faces(k)
    k1 = next(v for v in inner if v not in (a, b))
    cur_face, cur_chord = outer, (a, b)
    while True:
        w = next(v for v in cur_face if v not in cur_chord)
        ch = tuple(sorted((b, w)))
        if ch not in zero_chords:
            return k1, b, w
        cur_chord = ch
        cur_face = next(g for g in sys.chord_faces[ch] if g != cur_face)


def perturb_vanishing_diagonal(sys: BendingSystem, u: Polygon, k: int, t: float,
                               tol: Tolerances = DEFAULT) -> Polygon:
    """Open a vanishing diagonal ``d_k = d_{a,b}`` by a rigid rotation.

    With ``k1`` the apex of the inner face on ``d_k`` and ``k2`` the first
    vertex beyond ``b`` (across vanishing diagonals at ``b``) with
    ``d_{b,k2} != 0``, the cyclic arc of edges ``k1, ..., k2 - 1`` is rotated
    about ``d_{k1,k2}`` by the angle ``t``.  This moves vertex ``b`` off the
    vertex ``a`` as soon as ``d_{k1,b} x d_{b,k2} != 0``.
    """
    if not 0 <= k < len(sys.diags):
        raise InvalidIndex(f"diagonal index {k} out of range")
    scale = float(u.r.sum())
    band = tol.equality * scale
    P = vertices(u)
    lengths = {d: float(np.linalg.norm(P[d[1] - 1] - P[d[0] - 1])) for d in sys.diags}
    if lengths[sys.diags[k]] > band:
        raise DiagonalNotVanishing(f"diagonal {sys.diags[k]} has length {lengths[sys.diags[k]]:.3e}")
    zero_chords = {d for d, L in lengths.items() if L <= band}
    k1, p1, k2 = _walk_to_k2(sys, k, zero_chords)
    a_vec = P[p1 - 1] - P[k1 - 1]
    b_vec = P[k2 - 1] - P[p1 - 1]
    if np.linalg.norm(np.cross(a_vec, b_vec)) <= tol.equality * scale**2:
        raise NotInDenseSet(f"d_({k1},{p1}) and d_({p1},{k2}) are parallel")
    if t == 0:
        return u
    axis = P[k2 - 1] - P[k1 - 1]
    rot = Rotation.from_axis_angle(axis / np.linalg.norm(axis), t)
    arc = [(m - 1) % u.n for m in range(k1, k1 + (k2 - k1) % u.n)]
    new = np.array(u.u)
    new[arc] = rot.apply(new[arc])
    return Polygon(new, u.r)

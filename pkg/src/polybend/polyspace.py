"""Spaces of 3D polygons with fixed side lengths.

A polygon with side lengths ``r = (r_1, ..., r_n)`` is stored through its unit
edge directions ``u^1, ..., u^n`` subject to ``r_1 u^1 + ... + r_n u^n = 0``.
Tangent vectors are ``(n, 3)`` arrays ``X`` with ``<u^i, X^i> = 0`` and
``sum r_i X^i = 0``.

Vertex and edge indices are 1-based in function arguments, as in the usual
notation ``d_{i,j}`` for the vector joining vertex ``i`` to vertex ``j``.
Arrays are 0-based; the JSON helpers at the bottom use 0-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import ClosingViolation, InvalidIndex, NonUnitEdge, PolygonError, TangencyViolation
from .geom import Rotation, unit

__all__ = [
    "Polygon",
    "Stratum",
    "side_lengths",
    "validate_polygon",
    "diagonal",
    "chord_vector",
    "vertices",
    "is_generic",
    "omega",
    "orbit_tangent",
    "orbit_basis",
    "horizontal_project",
    "metric",
    "align_canonical",
    "stratum_of",
    "check_tangent",
    "polygon_to_json",
    "polygon_from_json",
]

GENERIC_MAX_N = 24


def side_lengths(r) -> np.ndarray:
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.size < 3:
        raise PolygonError(f"need at least 3 sides, got {r.size}")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise PolygonError(f"side lengths must be positive and finite: {r.tolist()}")
    r.setflags(write=False)
    return r


@dataclass(frozen=True, eq=False)
class Polygon:
    """Unit edge directions ``u`` (shape ``(n, 3)``) and side lengths ``r``.

    Construct through :func:`validate_polygon`; the constructor itself only
    freezes the arrays.
    """

    u: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        r = np.array(self.r, dtype=float)
        u.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def edges(self) -> np.ndarray:
        """Edge vectors ``r_i u^i``."""
        return self.r[:, None] * self.u

    def momentum(self) -> np.ndarray:
        """The SO(3) momentum value ``sum r_i u^i`` (zero on the polygon space)."""
        return self.edges.sum(axis=0)

    def closing_defect(self) -> float:
        return float(np.linalg.norm(self.momentum()))

    def rotated(self, rot: Rotation) -> "Polygon":
        return Polygon(rot.apply(self.u), self.r)

    def __repr__(self) -> str:
        return f"Polygon(n={self.n}, r={self.r.tolist()})"


@dataclass(frozen=True)
class Stratum:
    tag: str  # "Nondegenerate" | "Degenerate"
    direction: np.ndarray | None = field(default=None, compare=False)

    @property
    def degenerate(self) -> bool:
        return self.tag == "Degenerate"


def validate_polygon(u, r, tol: Tolerances = DEFAULT) -> Polygon:
    r = side_lengths(r)
    u = np.asarray(u, dtype=float)
    if u.shape != (r.size, 3):
        raise PolygonError(f"expected {r.size} edge directions in R^3, got shape {u.shape}")
    norms = np.linalg.norm(u, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > tol.unit)
    if bad.size:
        raise NonUnitEdge(f"edges {[int(b) + 1 for b in bad]} are not unit vectors (norms {norms[bad].tolist()})")
    u = u / norms[:, None]
    defect = np.linalg.norm(r @ u)
    if defect > tol.closing * r.sum():
        raise ClosingViolation(f"closing defect {defect:.3e} exceeds {tol.closing:.1e} * perimeter")
    return Polygon(u, r)


def _check_chord(n: int, i: int, j: int) -> None:
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise InvalidIndex(f"vertex pair ({i}, {j}) invalid for an {n}-gon")


def vertices(poly: Polygon) -> np.ndarray:
    """Vertex positions ``P_1 = 0, P_{k+1} = P_k + r_k u^k`` (shape ``(n, 3)``)."""
    P = np.zeros((poly.n, 3))
    np.cumsum(poly.edges[:-1], axis=0, out=P[1:])
    return P


def chord_vector(poly: Polygon, i: int, j: int) -> np.ndarray:
    """``d_{i,j}``: vector from vertex ``i`` to vertex ``j`` (any two distinct vertices)."""
    _check_chord(poly.n, i, j)
    if i < j:
        return poly.edges[i - 1 : j - 1].sum(axis=0)
    return -poly.edges[j - 1 : i - 1].sum(axis=0)


def diagonal(poly: Polygon, p) -> np.ndarray:
    """``d_{i,j}(u) = r_i u^i + ... + r_{j-1} u^{j-1}`` for ``p = (i, j)``, 1-based.

    The pair must be a true diagonal or side; the full loop ``(1, n+1)`` and
    out-of-range indices are rejected.
    """
    i, j = p
    return chord_vector(poly, int(i), int(j))


def is_generic(r, tol: float = DEFAULT.kernel) -> bool:
    """True when no signed sum ``sum eps_i r_i`` vanishes.

    Exhaustive over the ``2^(n-1)`` sign patterns with ``eps_1 = +1``;
    a sum counts as zero below ``tol * sum(r)``.  Limited to ``n <= 24``.
    """
    r = side_lengths(r)
    if r.size > GENERIC_MAX_N:
        raise ValueError(f"exhaustive genericity test limited to n <= {GENERIC_MAX_N}")
    sums = np.array([r[0]])
    for x in r[1:]:
        sums = np.concatenate([sums + x, sums - x])
    return bool(np.min(np.abs(sums)) > tol * r.sum())


def check_tangent(poly: Polygon, X, tol: Tolerances = DEFAULT) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != poly.u.shape:
        raise TangencyViolation(f"tangent vector shape {X.shape} != {poly.u.shape}")
    scale = max(1.0, float(np.abs(X).max(initial=0.0)))
    radial = np.abs(np.einsum("ij,ij->i", poly.u, X)).max()
    if radial > tol.tangent * scale:
        raise TangencyViolation(f"<u^i, X^i> up to {radial:.3e}")
    closing = np.linalg.norm(poly.r @ X)
    if closing > tol.tangent * scale * poly.r.sum():
        raise TangencyViolation(f"infinitesimal closing defect {closing:.3e}")
    return X


def omega(poly: Polygon, X, Y, check: bool = True, tol: Tolerances = DEFAULT) -> float:
    """Symplectic pairing ``sum_i r_i det(u^i, X^i, Y^i)``."""
    if check:
        X = check_tangent(poly, X, tol)
        Y = check_tangent(poly, Y, tol)
    return float(poly.r @ np.einsum("ij,ij->i", poly.u, np.cross(X, Y)))


def metric(poly: Polygon, X, Y) -> float:
    """Riemannian pairing ``sum_i r_i <X^i, Y^i>``."""
    return float(poly.r @ np.einsum("ij,ij->i", X, Y))


def orbit_tangent(poly: Polygon, v) -> np.ndarray:
    """Infinitesimal rotation field ``(v x u^1, ..., v x u^n)``."""
    return np.cross(np.asarray(v, dtype=float), poly.u)


def orbit_basis(poly: Polygon) -> np.ndarray:
    """The three generators ``e_a x u`` stacked as shape ``(3, n, 3)``."""
    return np.stack([orbit_tangent(poly, e) for e in np.eye(3)])


def horizontal_project(poly: Polygon, X) -> np.ndarray:
    """Component of ``X`` orthogonal (for :func:`metric`) to the SO(3)-orbit."""
    X = np.asarray(X, dtype=float)
    O = orbit_basis(poly)
    w = np.sqrt(poly.r)[:, None]
    A = (O * w).reshape(3, -1).T
    b = (X * w).reshape(-1)
    coef, *_ = np.linalg.lstsq(A, b, rcond=1e-10)
    return X - np.tensordot(coef, O, axes=1)


def _collinear(poly: Polygon, tol: Tolerances) -> bool:
    return bool(np.all(np.abs(np.cross(poly.u, poly.u[0])) < tol.collinear))


def stratum_of(poly: Polygon, tol: Tolerances = DEFAULT) -> Stratum:
    if _collinear(poly, tol):
        return Stratum("Degenerate", poly.u[0].copy())
    return Stratum("Nondegenerate")


def align_canonical(poly: Polygon, tol: Tolerances = DEFAULT) -> Polygon:
    """Representative of the SO(3)-orbit: ``u^1 = e_1``, first non-collinear edge in
    the upper half of the xy-plane.  Lined polygons only get ``u^1 = e_1``."""
    a = poly.u[0]
    off = np.linalg.norm(np.cross(poly.u, a), axis=1)
    idx = np.flatnonzero(off > tol.collinear)
    if idx.size == 0:
        e1 = np.array([1.0, 0.0, 0.0])
        axis = np.cross(a, e1)
        s, c = np.linalg.norm(axis), float(a @ e1)
        if s < tol.kernel:
            rot = Rotation.identity() if c > 0 else Rotation.from_axis_angle(np.array([0.0, 0.0, 1.0]), np.pi)
        else:
            rot = Rotation.from_axis_angle(axis / s, float(np.arctan2(s, c)))
        return poly.rotated(rot)
    b = poly.u[idx[0]]
    e2 = unit(b - (b @ a) * a)
    e3 = np.cross(a, e2)
    frame = np.stack([a, e2, e3])
    return Polygon(poly.u @ frame.T, poly.r)


# -- JSON wire format (0-based arrays) ------------------------------------------------


def polygon_to_json(poly: Polygon) -> dict:
    return {"r": poly.r.tolist(), "u": poly.u.tolist()}


def polygon_from_json(obj: dict, tol: Tolerances = DEFAULT) -> Polygon:
    try:
        r, u = obj["r"], obj["u"]
    except (KeyError, TypeError) as exc:
        raise PolygonError(f"polygon JSON needs keys 'r' and 'u': {exc}") from None
    return validate_polygon(u, r, tol)


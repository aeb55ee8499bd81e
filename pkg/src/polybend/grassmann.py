"""2-frames in C^n, their polygons, and the Gel'fand-Cetlin ladder.

A pair ``(z, w)`` of orthonormal vectors of ``C^n`` gives the quaternions
``q_l = z_l + w_l j`` and the polygon with edges ``phi(q_l) = conj(q_l) i q_l``,
which closes and has perimeter 2.  The Hermitian matrix
``M = ((z_a conj(z_b) + w_a conj(w_b)) / 2)`` has rank two, so every
eigenvalue used here comes from a 2x2 Gram matrix in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bending import BendingSystem, caterpillar, face_table, fiber_lengths
from .config import DEFAULT, Tolerances
from .errors import DegenerateNormalization, ImproperPolygon, InvalidIndex, NotAFrame, PartialSumNonzero
from .geom import Quaternion, herm2_eigs
from .polyspace import Polygon, side_lengths

__all__ = [
    "TwoFrame",
    "GCPattern",
    "FiberGraph",
    "SplitFrame",
    "random_frame",
    "phi_quat",
    "frame_edges",
    "frame_to_polygon",
    "act_quaternion",
    "psi_side",
    "psi_diagonal",
    "check_relation",
    "split_frame",
    "restrict_frame",
    "gc_pattern",
    "gc_identity_residuals",
    "fiber_graph",
    "frame_to_json",
    "frame_from_json",
]


@dataclass(frozen=True, eq=False)
class TwoFrame:
    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=complex).reshape(-1)
        w = np.array(self.w, dtype=complex).reshape(-1)
        z.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    @classmethod
    def validated(cls, z, w, tol: float = DEFAULT.kernel) -> "TwoFrame":
        f = cls(z, w)
        if f.z.shape != f.w.shape or f.z.size < 1:
            raise NotAFrame(f"z and w must be nonempty vectors of equal length ({f.z.shape} vs {f.w.shape})")
        nz, nw = np.linalg.norm(f.z), np.linalg.norm(f.w)
        inner = abs(np.vdot(f.w, f.z))
        if abs(nz - 1.0) > tol or abs(nw - 1.0) > tol or inner > tol:
            raise NotAFrame(f"not orthonormal: |z| = {nz!r}, |w| = {nw!r}, |<z,w>| = {inner!r}")
        return f

    @property
    def n(self) -> int:
        return self.z.size


def random_frame(n: int, rng: np.random.Generator) -> TwoFrame:
    """Uniform point of the Stiefel manifold: Gram-Schmidt on two complex Gaussians."""
    g = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
    z = g[0] / np.linalg.norm(g[0])
    w = g[1] - np.vdot(z, g[1]) * z
    w /= np.linalg.norm(w)
    return TwoFrame.validated(z, w)


def phi_quat(z: complex, w: complex) -> np.ndarray:
    """``conj(q) i q`` for ``q = z + w j``, as a vector of R^3."""
    zw = np.conj(z) * w
    return np.array([abs(z) ** 2 - abs(w) ** 2, -2.0 * zw.imag, 2.0 * zw.real])


def frame_edges(f: TwoFrame) -> np.ndarray:
    """Edge vectors ``phi(z_l + w_l j)`` for every coordinate (shape ``(n, 3)``)."""
    zw = np.conj(f.z) * f.w
    return np.stack([np.abs(f.z) ** 2 - np.abs(f.w) ** 2, -2.0 * zw.imag, 2.0 * zw.real], axis=1)


def frame_to_polygon(f: TwoFrame, tol: Tolerances = DEFAULT) -> Polygon:
    e = frame_edges(f)
    r = np.linalg.norm(e, axis=1)
    bad = tuple(int(i) + 1 for i in np.flatnonzero(r <= tol.kernel))
    if bad:
        raise ImproperPolygon(f"edges {list(bad)} vanish", bad)
    return Polygon(e / r[:, None], side_lengths(r))


def act_quaternion(f: TwoFrame, P: Quaternion) -> TwoFrame:
    """Right multiplication ``q_l -> q_l P`` of every coordinate quaternion."""
    z, w = [], []
    for zl, wl in zip(f.z, f.w):
        a, b = (Quaternion.from_complex_pair(complex(zl), complex(wl)) * P).complex_pair()
        z.append(a)
        w.append(b)
    return TwoFrame(z, w)


def _indices(n: int, I) -> np.ndarray:
    idx = np.array(sorted({int(i) for i in I}), dtype=int)
    if idx.size == 0:
        raise InvalidIndex("index set must be nonempty")
    if idx[0] < 1 or idx[-1] > n:
        raise InvalidIndex(f"indices {idx.tolist()} out of range 1..{n}")
    return idx - 1


def psi_side(f: TwoFrame, i: int) -> float:
    """``(|z_i|^2 + |w_i|^2) / 2``, half the length of edge ``i``."""
    (k,) = _indices(f.n, [i])
    return 0.5 * float(abs(f.z[k]) ** 2 + abs(f.w[k]) ** 2)


def psi_diagonal(f: TwoFrame, I) -> tuple[float, float]:
    """The two nonzero eigenvalues of the ``I x I`` block of ``M``."""
    idx = _indices(f.n, I)
    z, w = f.z[idx], f.w[idx]
    g11 = 0.5 * float(np.sum(np.abs(z) ** 2))
    g22 = 0.5 * float(np.sum(np.abs(w) ** 2))
    g12 = 0.5 * np.vdot(z, w)
    return herm2_eigs(g11, g22, g12)


def check_relation(f: TwoFrame, sys: BendingSystem | None = None) -> np.ndarray:
    """Residuals ``|4 lambda_2 + |sum_{l in I} q_l| - sum_{l in I} r_l|`` per diagonal.

    For the diagonal ``(i, j)`` the index set is ``I = {i, ..., j - 1}``;
    ``q_l`` are the polygon edges and ``r_l`` their lengths.
    """
    diags = caterpillar(f.n).diags if sys is None else sys.diags
    e = frame_edges(f)
    r = np.linalg.norm(e, axis=1)
    out = np.empty(len(diags))
    for k, (i, j) in enumerate(diags):
        _, lam2 = psi_diagonal(f, range(i, j))
        out[k] = abs(4.0 * lam2 + np.linalg.norm(e[i - 1 : j - 1].sum(axis=0)) - r[i - 1 : j - 1].sum())
    return out


@dataclass(frozen=True)
class SplitFrame:
    left: TwoFrame
    right: TwoFrame
    alpha: tuple[float, float]
    indices: tuple[tuple[int, ...], tuple[int, ...]]


def split_frame(f: TwoFrame, I, tol: Tolerances = DEFAULT) -> SplitFrame:
    """Split a frame whose edges over ``I`` close up into two rescaled frames.

    When ``sum_{l in I} phi(q_l) = 0`` the blocks ``(z_I, w_I)`` and
    ``(z_J, w_J)`` on ``I`` and its complement ``J`` are orthogonal pairs of
    equal norms; ``alpha = 1 / |z_I|`` and ``1 / |z_J|`` make them frames.
    """
    idx = _indices(f.n, I)
    rest = np.setdiff1d(np.arange(f.n), idx)
    partial = frame_edges(f)[idx].sum(axis=0)
    defect = float(np.linalg.norm(partial))
    if defect > tol.closing:
        raise PartialSumNonzero(f"edges over {(idx + 1).tolist()} sum to a vector of norm {defect:.3e}")
    blocks, alphas = [], []
    for part in (idx, rest):
        z, w = f.z[part], f.w[part]
        scale = np.sqrt(0.5 * float(np.sum(np.abs(z) ** 2) + np.sum(np.abs(w) ** 2)))
        if part.size == 0 or scale <= tol.kernel:
            raise DegenerateNormalization(f"block {(part + 1).tolist()} has zero norm")
        alpha = 1.0 / scale
        blocks.append(TwoFrame.validated(alpha * z, alpha * w, tol=max(tol.kernel, 10 * defect * alpha**2)))
        alphas.append(alpha)
    return SplitFrame(blocks[0], blocks[1], (alphas[0], alphas[1]),
                      (tuple(int(i) + 1 for i in idx), tuple(int(i) + 1 for i in rest)))


def restrict_frame(f: TwoFrame, tol: Tolerances = DEFAULT) -> tuple[TwoFrame, tuple[int, ...], tuple[int, ...]]:
    """Drop coordinates with ``z_l = w_l = 0`` exactly.

    Returns the restricted frame, the dropped (1-based) coordinates and the
    coordinates whose edge is merely small (reported, never dropped).
    """
    mag = np.abs(f.z) ** 2 + np.abs(f.w) ** 2
    zero = np.flatnonzero(mag == 0.0)
    small = np.flatnonzero((mag > 0.0) & (mag <= tol.closing))
    keep = np.flatnonzero(mag != 0.0)
    return (TwoFrame(f.z[keep], f.w[keep]), tuple(int(i) + 1 for i in zero), tuple(int(i) + 1 for i in small))


# -- Gel'fand-Cetlin ladder -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GCPattern:
    """``mu[k - 1, i - 1]`` is the ``i``-th eigenvalue of the leading ``k x k`` block."""

    mu: np.ndarray

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    def value(self, i: int, k: int) -> float:
        if not 1 <= i <= k <= self.n:
            raise InvalidIndex(f"mu_{i}^{k} undefined for n = {self.n}")
        return float(self.mu[k - 1, i - 1])

    def interlacing_defect(self) -> float:
        """Largest violation of ``mu_i^k >= mu_i^{k-1} >= mu_{i+1}^k``."""
        worst = 0.0
        for k in range(2, self.n + 1):
            for i in range(1, k):
                worst = max(worst, self.value(i, k - 1) - self.value(i, k),
                            self.value(i + 1, k) - self.value(i, k - 1))
        return worst


def gc_pattern(f: TwoFrame) -> GCPattern:
    az = np.cumsum(np.abs(f.z) ** 2)
    aw = np.cumsum(np.abs(f.w) ** 2)
    azw = np.cumsum(np.conj(f.z) * f.w)
    l1, l2 = herm2_eigs(0.5 * az, 0.5 * aw, 0.5 * azw)
    mu = np.zeros((f.n, f.n))
    mu[:, 0] = l1
    if f.n > 1:
        mu[1:, 1] = l2[1:]
    mu.setflags(write=False)
    return GCPattern(mu)


def gc_identity_residuals(f: TwoFrame, pattern: GCPattern | None = None) -> dict[str, float]:
    """Deviations from the closed forms of the ladder on a frame."""
    pat = gc_pattern(f) if pattern is None else pattern
    n = f.n
    sides = np.array([psi_side(f, i) for i in range(1, n + 1)])
    res = {
        "top": max(abs(pat.value(1, n) - 0.5), abs(pat.value(2, n) - 0.5)) if n >= 2 else 0.0,
        "first": abs(pat.value(1, 1) - sides[0]),
        "sub_top": abs(pat.value(1, n - 1) - 0.5) if n >= 3 else 0.0,
        "trace": max(
            (abs(pat.value(1, k) + (pat.value(2, k) if k >= 2 else 0.0) - sides[:k].sum()) for k in range(1, n + 1)),
            default=0.0,
        ),
        "higher_zero": float(np.abs(pat.mu[:, 2:]).max(initial=0.0)),
        "interlacing": max(0.0, pat.interlacing_defect()),
    }
    for k in range(2, n):
        _, lam2 = psi_diagonal(f, range(1, k + 1))
        res["trace"] = max(res["trace"], abs(pat.value(2, k) - lam2))
    return res


@dataclass(frozen=True)
class FiberGraph:
    n: int
    values: dict  # (i, k) -> closed-form value of mu_i^k on the fiber
    edges: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    diamonds: tuple[int, ...]  # 1-based i of each diamond D_i

    @staticmethod
    def label(v: tuple[int, int]) -> str:
        i, k = v
        return f"mu_{i}^{k}"

    def diamond_vertices(self, i: int) -> tuple[tuple[int, int], ...]:
        return ((1, i), (1, i + 1), (2, i + 2), (2, i + 1))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "vertices": [{"id": self.label(v), "i": v[0], "k": v[1], "value": self.values[v]} for v in sorted(self.values, key=lambda x: (x[1], x[0]))],
            "edges": [[self.label(a), self.label(b)] for a, b in self.edges],
            "diamonds": [i - 1 for i in self.diamonds],
        }

    def to_dot(self) -> str:
        in_diamond = set()
        for i in self.diamonds:
            vs = self.diamond_vertices(i)
            in_diamond |= {frozenset(p) for p in zip(vs, vs[1:] + vs[:1])}
        lines = ["graph Gamma_N {", "  node [shape=circle];"]
        for v in sorted(self.values, key=lambda x: (x[1], x[0])):
            lines.append(f'  "{self.label(v)}" [label="μ{v[0]}^{v[1]}"];')
        for a, b in self.edges:
            style = ' [color=red, penwidth=2, style=bold]' if frozenset((a, b)) in in_diamond else ""
            lines.append(f'  "{self.label(a)}" -- "{self.label(b)}"{style};')
        for i in self.diamonds:
            lines.append(f"  // diamond D_{i}: " + ", ".join(self.label(v) for v in self.diamond_vertices(i)))
        lines.append("}")
        return "\n".join(lines) + "\n"


def fiber_graph(r, c, sys: BendingSystem | None = None, tol: Tolerances = DEFAULT) -> FiberGraph:
    """The equality graph of the ladder functions on a caterpillar fiber.

    Values come in closed form from the side lengths and the diagonal
    lengths ``l = sqrt(2 c)``:  ``4 mu_{1,2}^k = r_1 + ... + r_k +- l_{k-1}``
    with ``l_0 = r_1`` and ``l_{n-2} = r_n``, and ``mu_{1,2}^n`` equal to a
    quarter of the perimeter.  Edges join neighbors of the interlacing
    diagram that carry the same value.
    """
    r = side_lengths(r)
    n = r.size
    cat = caterpillar(n)
    if sys is None:
        sys = BendingSystem(r, cat)
    elif sys.diags != cat.diags or not np.array_equal(sys.r, r):
        raise ValueError("the ladder graph is defined for the caterpillar system on r")
    face_table(sys, c, tol)
    ell = np.concatenate([[r[0]], fiber_lengths(c), [r[-1]]])
    R = np.cumsum(r)
    values = {}
    for k in range(1, n):
        values[(1, k)] = 0.25 * (R[k - 1] + ell[k - 1])
        if k >= 2:
            values[(2, k)] = 0.25 * (R[k - 1] - ell[k - 1])
    values[(1, n)] = values[(2, n)] = 0.25 * R[-1]
    edges = []
    for k in range(2, n + 1):
        for i in (1, 2):
            pairs = [((i, k), (i, k - 1)), ((i, k - 1), (i + 1, k))]
            for a, b in pairs:
                if a in values and b in values and abs(values[a] - values[b]) <= tol.equality:
                    edges.append((a, b))
    eset = {frozenset(e) for e in edges}
    diamonds = []
    for i in range(1, n - 2):
        vs = ((1, i), (1, i + 1), (2, i + 2), (2, i + 1))
        if all(frozenset(p) in eset for p in zip(vs, vs[1:] + vs[:1])):
            diamonds.append(i)
    return FiberGraph(n, values, tuple(edges), tuple(diamonds))


# -- JSON wire format -----------------------------------------------------------------


def frame_to_json(f: TwoFrame) -> dict:
    return {
        "n": f.n,
        "z": [[float(x.real), float(x.imag)] for x in f.z],
        "w": [[float(x.real), float(x.imag)] for x in f.w],
    }


def frame_from_json(obj: dict, tol: Tolerances = DEFAULT) -> TwoFrame:
    try:
        z = [complex(a, b) for a, b in obj["z"]]
        w = [complex(a, b) for a, b in obj["w"]]
        n = int(obj.get("n", len(z)))
    except (KeyError, TypeError, ValueError) as exc:
        raise NotAFrame(f"malformed frame JSON: {exc}") from None
    if len(z) != n:
        raise NotAFrame(f"declared n = {n} but got {len(z)} coordinates")
    return TwoFrame.validated(z, w, tol.kernel)

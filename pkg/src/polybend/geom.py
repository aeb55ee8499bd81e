"""Small-dimension geometry kernel.

Vectors of R^3 are plain ``numpy`` arrays of shape ``(3,)`` (or stacks of
shape ``(..., 3)``).  Rotations are stored as unit quaternions so that long
chains of bending flows compose without drift.

R^3 is identified with the imaginary quaternions ``i R + j R + k R``; a
vector ``(x, y, z)`` is the quaternion ``x i + y j + z k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT
from .errors import ContractViolation

__all__ = [
    "Quaternion",
    "Rotation",
    "rotate",
    "herm2_eigs",
    "random_rotation",
    "random_unit_vector",
    "perpendicular",
    "unit",
]


def unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def perpendicular(v: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to ``v`` (``v`` nonzero)."""
    v = np.asarray(v, dtype=float)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(v)))] = 1.0
    w = np.cross(v, helper)
    return w / np.linalg.norm(w)


@dataclass(frozen=True)
class Quaternion:
    re: float
    i: float = 0.0
    j: float = 0.0
    k: float = 0.0

    @classmethod
    def from_vector(cls, v) -> "Quaternion":
        x, y, z = (float(c) for c in v)
        return cls(0.0, x, y, z)

    @classmethod
    def from_complex_pair(cls, z: complex, w: complex) -> "Quaternion":
        """The quaternion ``z + w j`` with ``z, w`` complex (``i`` the complex unit).

        With this embedding ``conj(q) i q = i (|z|^2 - |w|^2 + 2 conj(z) w j)``.
        """
        # (c + d i) j = c j + d k
        return cls(z.real, z.imag, w.real, w.imag)

    def complex_pair(self) -> tuple[complex, complex]:
        return complex(self.re, self.i), complex(self.j, self.k)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.i, self.j, self.k])

    def as_array(self) -> np.ndarray:
        return np.array([self.re, self.i, self.j, self.k])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            a1, b1, c1, d1 = self.re, self.i, self.j, self.k
            a2, b2, c2, d2 = other.re, other.i, other.j, other.k
            return Quaternion(
                a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
                a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
                a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
                a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
            )
        s = float(other)
        return Quaternion(self.re * s, self.i * s, self.j * s, self.k * s)

    __rmul__ = __mul__

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.re + other.re, self.i + other.i, self.j + other.j, self.k + other.k)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.re - other.re, self.i - other.i, self.j - other.j, self.k - other.k)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.re, -self.i, -self.j, -self.k)

    def norm(self) -> float:
        return math.sqrt(self.re**2 + self.i**2 + self.j**2 + self.k**2)

    def inverse(self) -> "Quaternion":
        n2 = self.re**2 + self.i**2 + self.j**2 + self.k**2
        c = self.conjugate()
        return Quaternion(c.re / n2, c.i / n2, c.j / n2, c.k / n2)

    def normalized(self) -> "Quaternion":
        return self * (1.0 / self.norm())


I_UNIT = Quaternion(0.0, 1.0, 0.0, 0.0)


class Rotation:
    """A rotation of R^3, stored as a unit quaternion ``q`` acting by ``v -> q v q^-1``."""

    __slots__ = ("_q",)

    def __init__(self, q: Quaternion):
        self._q = q.normalized()

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(Quaternion(1.0))

    @classmethod
    def from_axis_angle(cls, axis, angle: float, tol: float = DEFAULT.kernel) -> "Rotation":
        axis = np.asarray(axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > tol:
            raise ContractViolation(f"rotation axis must be a unit vector, |axis| = {np.linalg.norm(axis)!r}")
        h = 0.5 * angle
        s = math.sin(h)
        return cls(Quaternion(math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s))

    @property
    def quaternion(self) -> Quaternion:
        return self._q

    @property
    def axis(self) -> np.ndarray:
        v = self._q.vector
        n = np.linalg.norm(v)
        return v / n if n > 0 else np.array([1.0, 0.0, 0.0])

    @property
    def angle(self) -> float:
        return 2.0 * math.atan2(np.linalg.norm(self._q.vector), self._q.re)

    def matrix(self) -> np.ndarray:
        a, b, c, d = self._q.re, self._q.i, self._q.j, self._q.k
        return np.array(
            [
                [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
                [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
                [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
            ]
        )

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Rotate a vector or a stack of vectors (last axis of size 3)."""
        return np.asarray(v, dtype=float) @ self.matrix().T

    def __matmul__(self, other: "Rotation") -> "Rotation":
        """``(self @ other)`` applies ``other`` first, then ``self``."""
        return Rotation(self._q * other._q)

    def inverse(self) -> "Rotation":
        return Rotation(self._q.conjugate())

    def __repr__(self) -> str:
        return f"Rotation(axis={self.axis.tolist()}, angle={self.angle!r})"


def rotate(r: Rotation, v) -> np.ndarray:
    return r.apply(v)


def random_rotation(rng: np.random.Generator) -> Rotation:
    """Haar-uniform rotation (normalized Gaussian quaternion)."""
    g = rng.standard_normal(4)
    return Rotation(Quaternion(*g))


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal(3)
    return g / np.linalg.norm(g)


def herm2_eigs(g11, g22, g12):
    """Eigenvalues ``(l1, l2)``, ``l1 >= l2``, of ``[[g11, g12], [conj(g12), g22]]``.

    Works elementwise on arrays.
    """
    g11 = np.asarray(g11, dtype=float)
    g22 = np.asarray(g22, dtype=float)
    mean = 0.5 * (g11 + g22)
    disc = np.hypot(0.5 * (g11 - g22), np.abs(g12))
    l1, l2 = mean + disc, mean - disc
    if l1.ndim == 0:
        return float(l1), float(l2)
    return l1, l2

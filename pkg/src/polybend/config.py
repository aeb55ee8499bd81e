"""Tolerance defaults shared by every module.

One record holds every numerical threshold so that property suites and the
command line can override them in a single place.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    kernel: float = 1e-12  # exact kernel identities (rotations, quaternions, 2x2 eigs)
    symplectic: float = 1e-9  # derived symplectic quantities (brackets)
    closing: float = 1e-10  # relative closing defect accepted by validate_polygon
    unit: float = 1e-9  # renormalization window for edge directions
    collinear: float = 1e-10  # componentwise |u^i x u^1| bound for lined polygons
    equality: float = 1e-10  # relative band for triangle equalities / zero diagonals
    rank: float = 1e-8  # singular values below rank * sigma_max count as zero
    isotropy: float = 1e-8  # max normalized |omega| for an isotropic fiber
    tangent: float = 1e-10  # tangency residuals

    def with_overrides(self, **kw: float) -> "Tolerances":
        return replace(self, **{k: float(v) for k, v in kw.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()

"""Bending flows on spaces of 3D polygons with fixed side lengths.

Modules:

* :mod:`polybend.geom` -- vectors, quaternions, rotations, 2x2 Hermitian eigenvalues
* :mod:`polybend.polyspace` -- polygons, diagonals, tangent vectors, symplectic form
* :mod:`polybend.bending` -- triangulations, momentum map, flows, action-angle coordinates
* :mod:`polybend.fibers` -- singular fibers, their homogeneous models, isotropy checks
* :mod:`polybend.grassmann` -- 2-frames, second-eigenvalue functions, Gel'fand-Cetlin ladder
* :mod:`polybend.verify` -- property suites used by the command line and the tests
"""

__version__ = "0.1.0"

from .config import DEFAULT, Tolerances  # noqa: E402
from .errors import *  # noqa: E402,F401,F403

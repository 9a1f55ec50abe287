"""Orbit-space geometry of the two cohomogeneity-one actions.

The quotient of ``S^{2n}`` by ``O(n) x O(n)`` (and of ``S^{3n-1}`` by
``O(n) x O(n) x O(n)``) is a region of the unit 2-sphere with polar
coordinates ``(r, theta)`` and metric ``dr^2 + sin(r)^2 dtheta^2``.  A point
of the quotient corresponds to the ambient triple

    x = sin r cos theta,   y = sin r sin theta,   z = cos r,

the norms of the three (or, for ``S^{2n}``, two plus one scalar) blocks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, InvalidParameters, SingularCoordinateError

#: Denominators smaller than this are treated as zero.
SINGULAR_TOL = 1e-12

#: Directions passed to ``lift`` must have unit norm to this tolerance.
UNIT_TOL = 1e-12

ARCTAN_SQRT2 = math.atan(math.sqrt(2.0))


class FamilyKind(str, enum.Enum):
    S2n = "s2n"
    S3nMinus1 = "s3n-1"


@dataclass(frozen=True)
class Family:
    """Which of the two ambient spheres, and the block size ``n``."""

    kind: FamilyKind
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise InvalidParameters(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def s2n(cls, n: int) -> "Family":
        return cls(FamilyKind.S2n, n)

    @classmethod
    def s3n(cls, n: int) -> "Family":
        return cls(FamilyKind.S3nMinus1, n)

    @property
    def is_s2n(self) -> bool:
        return self.kind is FamilyKind.S2n

    @property
    def blocks(self) -> int:
        """Number of ``S^{n-1}`` factors in a principal orbit."""
        return 2 if self.is_s2n else 3

    @property
    def ambient_dim(self) -> int:
        """Dimension of the ambient sphere."""
        return 2 * self.n if self.is_s2n else 3 * self.n - 1

    @property
    def hypersurface_dim(self) -> int:
        return self.ambient_dim - 1

    @property
    def r_max(self) -> float:
        """Upper end of the r-range of the quotient chart."""
        return math.pi if self.is_s2n else math.pi / 2

    @property
    def r0_max(self) -> float:
        """Upper end of the admissible initial radii for shooting."""
        return math.pi / 2 if self.is_s2n else ARCTAN_SQRT2

    def __str__(self):
        return f"{self.kind.value}(n={self.n})"


class OrbitPoint(NamedTuple):
    r: float
    theta: float


class CurvatureVector(NamedTuple):
    """Distinct principal curvatures of an equivariant hypersurface.

    ``kappa_x``, ``kappa_y`` and (for ``S^{3n-1}``) ``kappa_z`` each occur with
    multiplicity ``n - 1``; ``kappa_profile`` is the curvature of the
    generating curve direction and occurs once.  ``kappa_z`` is ``None`` for
    the ``S^{2n}`` family.
    """

    kappa_x: float
    kappa_y: float
    kappa_z: float | None
    kappa_profile: float
    multiplicity: int

    def total(self) -> float:
        blocks = self.kappa_x + self.kappa_y
        if self.kappa_z is not None:
            blocks += self.kappa_z
        return self.multiplicity * blocks + self.kappa_profile

    def multiplicities(self) -> tuple[int, ...]:
        m = self.multiplicity
        return (m, m, 1) if self.kappa_z is None else (m, m, m, 1)


def quotient_triple(r: float, theta: float) -> tuple[float, float, float]:
    """Ambient quotient coordinates ``(x, y, z)`` of the chart point."""
    sr = math.sin(r)
    return sr * math.cos(theta), sr * math.sin(theta), math.cos(r)


def chart_from_triple(x: float, y: float, z: float) -> OrbitPoint:
    """Inverse of :func:`quotient_triple` on the closed quotient."""
    z = max(-1.0, min(1.0, z))
    return OrbitPoint(math.acos(z), math.atan2(y, x))


def _axis(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[0] = 1.0
    return e


def lift(
    family: Family,
    p: OrbitPoint | Sequence[float],
    dirs: Sequence[Sequence[float]] | None = None,
) -> np.ndarray:
    """Map a quotient point and block directions to a unit vector of the sphere.

    ``dirs`` holds one unit vector of ``R^n`` per block (two for ``S^{2n}``,
    three for ``S^{3n-1}``); it defaults to the first coordinate axis for
    every block.
    """
    r, theta = p
    n = family.n
    if dirs is None:
        dirs = [_axis(n)] * family.blocks
    if len(dirs) != family.blocks:
        raise DimensionError(
            f"{family} needs {family.blocks} block directions, got {len(dirs)}"
        )
    vecs = []
    for d in dirs:
        d = np.asarray(d, dtype=float)
        if d.shape != (n,):
            raise DimensionError(f"block direction must have shape ({n},), got {d.shape}")
        if abs(np.linalg.norm(d) - 1.0) > UNIT_TOL:
            raise DimensionError(f"block direction {d} is not a unit vector")
        vecs.append(d)
    x, y, z = quotient_triple(r, theta)
    parts = [x * vecs[0], y * vecs[1]]
    if family.is_s2n:
        parts.append(np.array([z]))
    else:
        parts.append(z * vecs[2])
    return np.concatenate(parts)


def beta(r: float, theta: float) -> float:
    """Angle against d/dr of the normal to the mirror ``tan r cos theta = 1``.

    Only meaningful on that mirror; the formula itself is total.
    """
    return -math.atan(math.sin(r) * math.sin(theta))


def _guard(value: float, name: str) -> float:
    if abs(value) < SINGULAR_TOL:
        raise SingularCoordinateError(f"{name} vanishes (|{name}| = {abs(value):.3e})")
    return value


def principal_curvatures(family: Family, state, alpha_prime: float) -> CurvatureVector:
    """Principal curvatures at the orbit through ``state = (r, theta, alpha)``.

    ``alpha_prime`` is the arc-length derivative of the tangent angle.
    """
    r, theta, alpha = state[0], state[1], state[2]
    sr, cr = math.sin(r), math.cos(r)
    st, ct = math.sin(theta), math.cos(theta)
    sa, ca = math.sin(alpha), math.cos(alpha)
    _guard(sr, "sin r")
    _guard(ct, "cos theta")
    _guard(st, "sin theta")
    kx = (cr * ct * sa + st * ca) / (sr * ct)
    ky = (cr * st * sa - ct * ca) / (sr * st)
    kz = None
    if not family.is_s2n:
        _guard(cr, "cos r")
        kz = -(sr / cr) * sa
    kp = alpha_prime + (cr / sr) * sa
    return CurvatureVector(kx, ky, kz, kp, family.n - 1)


def mean_curvature(family: Family, state, alpha_prime: float) -> float:
    """Unnormalised mean curvature: the multiplicity-weighted sum."""
    return principal_curvatures(family, state, alpha_prime).total()

"""Reduced CMC equations on the orbit space.

A generating curve parametrised by arc length ``s`` is described by the
phase point ``(r, theta, alpha)``, where ``alpha`` is the angle between the
unit tangent and ``d/dr``.  The constant-mean-curvature condition ``H = lam``
turns into the first-order system

    dr/ds     = cos(alpha)
    dtheta/ds = sin(alpha) / sin(r)
    dalpha/ds = (2n-2) cot(2 theta) cos(alpha) / sin(r) + W(r) sin(alpha) + lam

with ``W(r) = -(2n-1) cot r`` on ``S^{2n}`` and
``W(r) = (n-1) tan r - (2n-1) cot r`` on ``S^{3n-1}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InvalidParameters, SingularCoordinateError
from .geometry import (
    ARCTAN_SQRT2,
    SINGULAR_TOL,
    Family,
    chart_from_triple,
    quotient_triple,
)

QUARTER_PI = math.pi / 4
HALF_PI = math.pi / 2

#: Trajectories are not allowed to come closer than this to ``theta = 0``.
THETA_MIN = 1e-6


class ShootingState(NamedTuple):
    r: float
    theta: float
    alpha: float


class PhaseState(NamedTuple):
    """Coordinates ``x = tan r``, ``y = cot 2theta``, ``z = -cot alpha``."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class Params:
    family: Family
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0.0:
            raise InvalidParameters(f"lambda must be finite and > 0, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.family.n


def start_state(r0: float) -> ShootingState:
    """Initial data: leave the mirror ``theta = pi/4`` orthogonally."""
    return ShootingState(r0, QUARTER_PI, -HALF_PI)


def _cot2theta_cos(theta: float, ca: float) -> float:
    if theta == QUARTER_PI:
        return 0.0
    s2 = math.sin(2.0 * theta)
    if abs(s2) < SINGULAR_TOL:
        if abs(ca) < SINGULAR_TOL:
            return 0.0
        raise SingularCoordinateError(f"sin(2 theta) vanishes at theta={theta!r}")
    return math.cos(2.0 * theta) / s2 * ca


def rhs_alpha(params: Params, state) -> float:
    """``dalpha/ds`` from the CMC condition."""
    r, theta, alpha = state[0], state[1], state[2]
    n = params.family.n
    sr, cr = math.sin(r), math.cos(r)
    if abs(sr) < SINGULAR_TOL:
        raise SingularCoordinateError(f"sin r vanishes at r={r!r}")
    sa, ca = math.sin(alpha), math.cos(alpha)
    w = -(2 * n - 1) * cr / sr
    if not params.family.is_s2n:
        if abs(cr) < SINGULAR_TOL:
            raise SingularCoordinateError(f"cos r vanishes at r={r!r}")
        w += (n - 1) * sr / cr
    return (2 * n - 2) * _cot2theta_cos(theta, ca) / sr + w * sa + params.lam


def rhs(params: Params, state) -> tuple[float, float, float]:
    """Right-hand side ``d(r, theta, alpha)/ds``."""
    r, alpha = state[0], state[2]
    sr = math.sin(r)
    if abs(sr) < SINGULAR_TOL:
        raise SingularCoordinateError(f"sin r vanishes at r={r!r}")
    return (math.cos(alpha), math.sin(alpha) / sr, rhs_alpha(params, state))


def vector_field(params: Params) -> Callable[[float, np.ndarray], tuple]:
    """Autonomous field in the ``f(s, y)`` form used by the integrators."""

    def f(s, y):
        return rhs(params, y)

    return f


# -- transformed coordinates ------------------------------------------------


def to_phase(state) -> PhaseState:
    r, theta, alpha = state[0], state[1], state[2]
    cr, sa, s2 = math.cos(r), math.sin(alpha), math.sin(2.0 * theta)
    if abs(cr) < SINGULAR_TOL:
        raise SingularCoordinateError("tan r is infinite at r = pi/2")
    if abs(sa) < SINGULAR_TOL:
        raise SingularCoordinateError("cot alpha is infinite at alpha = 0")
    if abs(s2) < SINGULAR_TOL:
        raise SingularCoordinateError("cot 2theta is infinite")
    y = 0.0 if theta == QUARTER_PI else math.cos(2.0 * theta) / s2
    return PhaseState(math.sin(r) / cr, y, -math.cos(alpha) / sa)


def from_phase(phase) -> ShootingState:
    x, y, z = phase[0], phase[1], phase[2]
    if not (x > 0.0 and y >= 0.0 and z >= 0.0):
        raise DomainError(f"phase point {tuple(phase)} is outside x > 0, y >= 0, z >= 0")
    theta = QUARTER_PI if y == 0.0 else 0.5 * (HALF_PI - math.atan(y))
    alpha = -HALF_PI if z == 0.0 else math.atan(z) - HALF_PI
    return ShootingState(math.atan(x), theta, alpha)


def rhs_phase(params: Params, phase) -> tuple[float, float, float]:
    """Right-hand side of the system in ``(x, y, z)`` coordinates (S^{2n} only)."""
    if not params.family.is_s2n:
        raise DomainError("the transformed system exists only for the S^{2n} family")
    x, y, z = phase[0], phase[1], phase[2]
    if not x > 0.0:
        raise DomainError(f"x = tan r must be positive, got {x!r}")
    n = params.family.n
    qx = math.sqrt(x * x + 1.0)
    qz = math.sqrt(z * z + 1.0)
    dx = (x * x + 1.0) * z / qz
    dy = 2.0 * (y * y + 1.0) * qx / (x * qz)
    dz = (z * z + 1.0) * (
        (2 * n - 2) * y * z * qx / (x * qz) + (2 * n - 1) / (x * qz) + params.lam
    )
    return dx, dy, dz


# -- shooting domains and events -------------------------------------------


class DomainBox(str, enum.Enum):
    B = "B"
    BHat = "BHat"

    @classmethod
    def for_family(cls, family: Family) -> "DomainBox":
        return cls.B if family.is_s2n else cls.BHat

    def contains(self, state, slack: float = 0.0) -> bool:
        r, theta, alpha = state[0], state[1], state[2]
        r_hi = HALF_PI if self is DomainBox.B else ARCTAN_SQRT2
        ok = (
            0.0 < r <= r_hi + slack
            and 0.0 < theta <= QUARTER_PI + slack
            and -HALF_PI - slack <= alpha <= slack
        )
        if ok and self is DomainBox.BHat:
            ok = math.tan(r) * math.cos(theta) <= 1.0 + slack
        return ok


@dataclass(frozen=True)
class Event:
    """A scalar function of the state; fires when it crosses zero upwards."""

    name: str
    func: Callable[[Sequence[float]], float]

    def __call__(self, state) -> float:
        return self.func(state)


def e_alpha(state) -> float:
    return state[2]


def e_rwall(state) -> float:
    return state[0] - HALF_PI


def e_gamma(state) -> float:
    return math.tan(state[0]) * math.cos(state[1]) - 1.0


def e_guard(state) -> float:
    return THETA_MIN - state[1]


ALPHA_ZERO = "alpha"
R_WALL = "rwall"
GAMMA_WALL = "gamma"
THETA_GUARD = "guard"


def events(box: DomainBox) -> list[Event]:
    """Exit events of a shooting box, each oriented to fire upwards."""
    if DomainBox(box) is DomainBox.B:
        wall = Event(R_WALL, e_rwall)
    else:
        wall = Event(GAMMA_WALL, e_gamma)
    return [Event(ALPHA_ZERO, e_alpha), wall, Event(THETA_GUARD, e_guard)]


# -- symmetries -------------------------------------------------------------


class SymmetryMap(str, enum.Enum):
    ReflectTheta = "reflect-theta"
    ReflectR = "reflect-r"
    Reverse = "reverse"


def symmetry(kind: SymmetryMap, state) -> ShootingState:
    """Pointwise part of the symmetries of the system.

    The time-reversal ``s -> L - s`` that goes with each map is applied by
    whoever owns the whole trajectory.
    """
    r, theta, alpha = state[0], state[1], state[2]
    kind = SymmetryMap(kind)
    if kind is SymmetryMap.ReflectTheta:
        return ShootingState(r, HALF_PI - theta, math.pi - alpha)
    if kind is SymmetryMap.ReflectR:
        return ShootingState(math.pi - r, theta, -alpha)
    return ShootingState(r, theta, math.pi + alpha)


def tangent_vector(r: float, theta: float, alpha: float) -> np.ndarray:
    """Unit tangent in the ambient ``(x, y, z)`` space."""
    cr, sr = math.cos(r), math.sin(r)
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    e_r = np.array([cr * ct, cr * st, -sr])
    e_t = np.array([-st, ct, 0.0])
    return ca * e_r + sa * e_t


def tangent_angle(r: float, theta: float, tangent) -> float:
    """Angle of an ambient tangent vector against ``d/dr``, in (-pi, pi]."""
    cr, sr = math.cos(r), math.sin(r)
    ct, st = math.cos(theta), math.sin(theta)
    t = np.asarray(tangent, dtype=float)
    along_r = t[0] * cr * ct + t[1] * cr * st - t[2] * sr
    along_t = -t[0] * st + t[1] * ct
    return math.atan2(along_t, along_r)


#: Ambient linear maps fixing the mirrors of the quotient.
MIRRORS = {
    "theta": np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    "r": np.diag([1.0, 1.0, -1.0]),
    "xz": np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
}


def apply_ambient(matrix: np.ndarray, state) -> ShootingState:
    """Push ``(r, theta, alpha)`` through an orthogonal map of the ambient triple.

    The tangent is transported without reversing orientation.
    """
    r, theta, alpha = state[0], state[1], state[2]
    p = matrix @ np.array(quotient_triple(r, theta))
    t = matrix @ tangent_vector(r, theta, alpha)
    q = chart_from_triple(*p)
    if abs(math.sin(q.r)) < SINGULAR_TOL:
        raise SingularCoordinateError("reflected point sits at a pole (sin r = 0)")
    return ShootingState(q.r, q.theta, tangent_angle(q.r, q.theta, t))


def reflect_curve_xz(samples) -> list[ShootingState]:
    """Mirror samples ``(r, theta, alpha)`` across ``{x = z}`` (``tan r cos theta = 1``)."""
    return [apply_ambient(MIRRORS["xz"], s) for s in samples]

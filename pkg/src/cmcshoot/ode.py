"""Adaptive Dormand-Prince 5(4) integrator with dense output and events.

This is the only adaptive integrator in the package.  Every accepted step
keeps the coefficients of the fourth-order continuous extension, so the
returned :class:`DenseTrajectory` can be evaluated at any arc length.
Events are scalar functions of the state that fire when they cross zero
from below; crossings are located by bisection on the interpolant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameters, SingularCoordinateError, StepUnderflow

logger = logging.getLogger(__name__)

# Dormand & Prince (1980); dense output coefficients from Hairer, Norsett & Wanner.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-14
    h_max: float = 0.05
    max_steps: int = 200_000
    event_tol: float = 1e-12

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.event_tol > 0):
            raise InvalidParameters("rtol, atol and event_tol must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise InvalidParameters("need 0 < h_min <= h_init <= h_max")
        if self.max_steps < 1:
            raise InvalidParameters("max_steps must be >= 1")


@dataclass
class DenseTrajectory:
    """Accepted steps of one integration plus their interpolation data.

    ``coeffs[i]`` holds the five coefficient vectors of the continuous
    extension on ``[s[i], s[i+1]]``.
    """

    s: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray

    def __len__(self):
        return len(self.s)

    @property
    def s_end(self) -> float:
        return float(self.s[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]

    def segment(self, s: float) -> int:
        i = int(np.searchsorted(self.s, s, side="right")) - 1
        return min(max(i, 0), len(self.s) - 2)

    def _eval_segment(self, i: int, s: float) -> np.ndarray:
        h = self.s[i + 1] - self.s[i]
        t = (s - self.s[i]) / h
        t1 = 1.0 - t
        c = self.coeffs[i]
        return c[0] + t * (c[1] + t1 * (c[2] + t * (c[3] + t1 * c[4])))

    def __call__(self, s):
        """Evaluate the state at arc length ``s`` (scalar or array)."""
        if len(self.s) == 1:
            return np.broadcast_to(self.y[0], np.shape(s) + self.y[0].shape).copy()
        if np.ndim(s) == 0:
            return self._eval_segment(self.segment(float(s)), float(s))
        return np.array([self._eval_segment(self.segment(v), v) for v in np.asarray(s)])

    def truncated(self, s_end: float, y_end: np.ndarray) -> "DenseTrajectory":
        """Copy ending exactly at ``s_end`` inside the last segment.

        The last segment keeps its original interpolant (reparametrised), so
        values up to ``s_end`` are unchanged.
        """
        i = len(self.s) - 2
        s0 = self.s[i]
        # the interpolant is a quartic in s: resample it on the shorter interval
        taus = np.linspace(0.0, 1.0, 5)
        vals = np.array([self._eval_segment(i, s0 + tau * (s_end - s0)) for tau in taus])
        vals[-1] = y_end
        new_c = _fit_dense(vals)
        s_arr = self.s.copy()
        s_arr[-1] = s_end
        y_arr = self.y.copy()
        y_arr[-1] = y_end
        coeffs = self.coeffs.copy()
        coeffs[i] = new_c
        return DenseTrajectory(s_arr, y_arr, coeffs)


def _fit_dense(vals: np.ndarray) -> np.ndarray:
    """Coefficients of the nested form matching a quartic at 5 equispaced nodes."""
    taus = np.linspace(0.0, 1.0, 5)
    # basis of the nested form: 1, t, t(1-t), t^2(1-t), t^2(1-t)^2
    basis = np.stack(
        [np.ones(5), taus, taus * (1 - taus), taus**2 * (1 - taus), taus**2 * (1 - taus) ** 2],
        axis=1,
    )
    return np.linalg.solve(basis, vals)


@dataclass(frozen=True)
class EventHit:
    event: str
    s_hit: float
    state_hit: np.ndarray


@dataclass
class IntegrationResult:
    """Outcome of :func:`integrate_until_event`.

    ``status`` is ``"event"`` (``hits`` non-empty, earliest first),
    ``"budget"`` (``max_steps`` accepted steps without an event) or
    ``"s_max"`` (reached the requested end of the arc-length interval).
    """

    trajectory: DenseTrajectory
    hits: list[EventHit] = field(default_factory=list)
    status: str = "event"
    n_rejected: int = 0

    @property
    def hit(self) -> EventHit | None:
        return self.hits[0] if self.hits else None


def _as_vec(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


def dopri_step(f, s, y, k1, h):
    """One Dormand-Prince step; returns (y_new, k7, error vector, stages)."""
    k2 = _as_vec(f(s + C2 * h, y + h * (A21 * k1)))
    k3 = _as_vec(f(s + C3 * h, y + h * (A31 * k1 + A32 * k2)))
    k4 = _as_vec(f(s + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3)))
    k5 = _as_vec(f(s + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)))
    k6 = _as_vec(
        f(s + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
    )
    y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
    k7 = _as_vec(f(s + h, y_new))
    err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    return y_new, k7, err, (k1, k3, k4, k5, k6, k7)


def _dense_coeffs(y0, y1, h, stages) -> np.ndarray:
    k1, k3, k4, k5, k6, k7 = stages
    ydiff = y1 - y0
    bspl = h * k1 - ydiff
    return np.array(
        [
            y0,
            ydiff,
            bspl,
            ydiff - h * k7 - bspl,
            h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
        ]
    )


def _locate(g, a, b, tol):
    """Bisection for the upward zero of ``g`` with ``g(a) < 0 <= g(b)``.

    Returns the left end of the final bracket, i.e. the last point where
    ``g`` is still negative, so located states stay inside their domain.
    """
    while b - a > tol:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if g(m) < 0.0:
            a = m
        else:
            b = m
    return a


def _norm(err, y0, y1, cfg) -> float:
    scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate_until_event(
    f: Callable[[float, np.ndarray], Sequence[float]],
    y0: Sequence[float],
    events: Sequence,
    config: IntegratorConfig | None = None,
    s_max: float | None = None,
) -> IntegrationResult:
    """Integrate ``dy/ds = f(s, y)`` from ``s = 0`` until an event fires.

    ``events`` are callables of the state carrying a ``name`` attribute (see
    :class:`cmcshoot.dynamics.Event`).  When several events cross inside one
    step, every event whose localized arc length is within ``event_tol`` of
    the earliest one is reported.  Non-finite right-hand sides raise
    :class:`SingularCoordinateError`.
    """
    cfg = config or IntegratorConfig()
    if not events and s_max is None:
        raise InvalidParameters("need at least one event or an s_max")
    y = _as_vec(y0).copy()
    k1 = _as_vec(f(0.0, y))
    if not np.all(np.isfinite(k1)):
        raise SingularCoordinateError(f"right-hand side is not finite at {y}")
    names = [getattr(e, "name", f"event{i}") for i, e in enumerate(events)]
    g_prev = [float(e(y)) for e in events]

    s_list, y_list, c_list = [0.0], [y.copy()], []
    s = 0.0
    h = cfg.h_init
    n_rej = 0
    status = "budget"
    hits: list[EventHit] = []

    for _ in range(cfg.max_steps):
        last = False
        if s_max is not None and s + h >= s_max:
            h = s_max - s
            last = True
        singular: Exception | None = None
        while True:
            if h < cfg.h_min and not last:
                if singular is not None:
                    raise SingularCoordinateError(
                        f"right-hand side singular near s={s:.12g}: {singular}"
                    )
                raise StepUnderflow(f"step size {h:.3e} below h_min at s={s:.12g}")
            try:
                y_new, k7, err, stages = dopri_step(f, s, y, k1, h)
                finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(k7))
                if not finite:
                    singular = SingularCoordinateError("non-finite stage value")
            except (SingularCoordinateError, ZeroDivisionError, ValueError) as exc:
                finite = False
                singular = exc
            if not finite:
                # stepped into a singular region; retry smaller and let the
                # underflow check report it if it persists
                h *= 0.25
                last = False
                n_rej += 1
                continue
            singular = None
            en = _norm(err, y, y_new, cfg)
            if en <= 1.0:
                break
            h = max(h * max(FAC_MIN, SAFETY * en ** -0.2), 0.0)
            last = False
            n_rej += 1

        s_new = s + h
        coeffs = _dense_coeffs(y, y_new, h, stages)
        s_list.append(s_new)
        y_list.append(y_new)
        c_list.append(coeffs)

        g_new = [float(e(y_new)) for e in events]
        crossed = [i for i, (a, b) in enumerate(zip(g_prev, g_new)) if a < 0.0 <= b]
        if crossed:
            traj = DenseTrajectory(np.array(s_list), np.array(y_list), np.array(c_list))
            seg = len(s_list) - 2
            loc = []
            for i in crossed:
                ev = events[i]
                s_i = _locate(
                    lambda v: float(ev(traj._eval_segment(seg, v))),
                    s,
                    s_new,
                    cfg.event_tol,
                )
                loc.append((s_i, i))
            loc.sort()
            s_hit = loc[0][0]
            y_hit = traj._eval_segment(seg, s_hit) if s_hit > s else y
            hits = [
                EventHit(names[i], s_i, y_hit.copy())
                for s_i, i in loc
                if s_i - s_hit <= cfg.event_tol
            ]
            if s_hit <= s:
                # crossing within event_tol of the previous accepted step
                traj = DenseTrajectory(
                    np.array(s_list[:-1]), np.array(y_list[:-1]),
                    np.array(c_list[:-1]).reshape(-1, 5, len(y)),
                )
            else:
                traj = traj.truncated(s_hit, y_hit)
            return IntegrationResult(traj, hits, "event", n_rej)

        g_prev = g_new
        s, y, k1 = s_new, y_new, k7
        if last:
            status = "s_max"
            break
        fac = min(FAC_MAX, max(FAC_MIN, SAFETY * max(en, 1e-10) ** -0.2))
        h = min(h * fac, cfg.h_max)

    traj = DenseTrajectory(
        np.array(s_list), np.array(y_list), np.array(c_list).reshape(-1, 5, len(y))
    )
    if status == "budget":
        logger.info("integration stopped after %d steps without an event", cfg.max_steps)
    return IntegrationResult(traj, [], status, n_rej)

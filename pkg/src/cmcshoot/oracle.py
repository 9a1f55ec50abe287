"""Fixed-step classical Runge-Kutta reference integrator.

Deliberately shares no code with :mod:`cmcshoot.ode` or
:mod:`cmcshoot.dynamics`: the right-hand side is re-implemented here and
compiled with numba, so that tiny fixed steps (``1e-5`` and below) stay
cheap.  Exit crossings are located by bisecting the length of a partial
Runge-Kutta step, not by interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidParameters, SingularCoordinateError

ORACLE_MAX_STEP = 1e-5

_NO_EVENT = 0
_ALPHA = 1
_RWALL = 2
_GAMMA = 3
_GUARD = 4
_SINGULAR = 5
_EVENT_NAMES = {_ALPHA: "alpha", _RWALL: "rwall", _GAMMA: "gamma", _GUARD: "guard"}

_THETA_MIN = 1e-6


@numba.njit(cache=True)
def _field(kind, n, lam, y, out):
    r, th, al = y[0], y[1], y[2]
    sr = math.sin(r)
    cr = math.cos(r)
    sa = math.sin(al)
    ca = math.cos(al)
    out[0] = ca
    out[1] = sa / sr
    if th == math.pi / 4:
        c2 = 0.0
    else:
        c2 = math.cos(2.0 * th) / math.sin(2.0 * th)
    coef = -(2.0 * n - 1.0) * cr / sr
    if kind == 1:
        coef += (n - 1.0) * sr / cr
    out[2] = (2.0 * n - 2.0) * c2 * ca / sr + coef * sa + lam


@numba.njit(cache=True)
def _rk4(kind, n, lam, y, h, out):
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    tmp = np.empty(3)
    _field(kind, n, lam, y, k1)
    for i in range(3):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _field(kind, n, lam, tmp, k2)
    for i in range(3):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _field(kind, n, lam, tmp, k3)
    for i in range(3):
        tmp[i] = y[i] + h * k3[i]
    _field(kind, n, lam, tmp, k4)
    for i in range(3):
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@numba.njit(cache=True)
def _event_value(code, y):
    if code == _ALPHA:
        return y[2]
    if code == _RWALL:
        return y[0] - math.pi / 2
    if code == _GAMMA:
        return math.tan(y[0]) * math.cos(y[1]) - 1.0
    return _THETA_MIN - y[1]


@numba.njit(cache=True)
def _run(kind, n, lam, y0, h, s_max, box, record_every, max_records):
    """box: 0 none, 1 the S^{2n} box, 2 the S^{3n-1} box."""
    codes = np.array([_ALPHA, _RWALL, _GUARD]) if box == 1 else np.array([_ALPHA, _GAMMA, _GUARD])
    n_codes = 3 if box != 0 else 0
    rec_s = np.empty(max_records)
    rec_y = np.empty((max_records, 3))
    y = y0.copy()
    y_new = np.empty(3)
    y_try = np.empty(3)
    s = 0.0
    rec_s[0] = 0.0
    rec_y[0] = y
    nrec = 1
    step = 0
    g_prev = np.empty(3)
    for c in range(n_codes):
        g_prev[c] = _event_value(codes[c], y)
    while s < s_max:
        hh = h
        if s + hh > s_max:
            hh = s_max - s
        _rk4(kind, n, lam, y, hh, y_new)
        if not (np.isfinite(y_new[0]) and np.isfinite(y_new[1]) and np.isfinite(y_new[2])):
            return rec_s[:nrec], rec_y[:nrec], _SINGULAR, s, y
        best_code = _NO_EVENT
        best_h = hh
        for c in range(n_codes):
            g_new = _event_value(codes[c], y_new)
            if g_prev[c] < 0.0 and g_new >= 0.0:
                lo = 0.0
                hi = hh
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    _rk4(kind, n, lam, y, mid, y_try)
                    if _event_value(codes[c], y_try) < 0.0:
                        lo = mid
                    else:
                        hi = mid
                if lo < best_h:
                    best_h = lo
                    best_code = codes[c]
        if best_code != _NO_EVENT:
            _rk4(kind, n, lam, y, best_h, y_new)
            s = s + best_h
            if nrec < max_records:
                rec_s[nrec] = s
                rec_y[nrec] = y_new
                nrec += 1
            return rec_s[:nrec], rec_y[:nrec], best_code, s, y_new
        for c in range(n_codes):
            g_prev[c] = _event_value(codes[c], y_new)
        s += hh
        y[:] = y_new
        step += 1
        if step % record_every == 0 or s >= s_max:
            if nrec < max_records:
                rec_s[nrec] = s
                rec_y[nrec] = y
                nrec += 1
    return rec_s[:nrec], rec_y[:nrec], _NO_EVENT, s, y


@dataclass(frozen=True)
class OracleConfig:
    step: float = 1e-6
    method: str = "rk4"
    record_every: int = 100

    def __post_init__(self):
        if not (0 < self.step <= ORACLE_MAX_STEP):
            raise InvalidParameters(f"oracle step must be in (0, {ORACLE_MAX_STEP}]")
        if self.method != "rk4":
            raise InvalidParameters("the oracle only implements classical RK4")


@dataclass
class OracleTrajectory:
    """Recorded samples of a fixed-step run, with cubic Hermite interpolation."""

    s: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    event: str | None
    s_end: float
    y_end: np.ndarray

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        i = np.clip(np.searchsorted(self.s, s_arr, side="right") - 1, 0, len(self.s) - 2)
        h = (self.s[i + 1] - self.s[i])[:, None]
        t = ((s_arr - self.s[i]) / h[:, 0])[:, None]
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        out = h00 * self.y[i] + h10 * h * self.dy[i] + h01 * self.y[i + 1] + h11 * h * self.dy[i + 1]
        return out[0] if np.ndim(s) == 0 else out


def _family_code(params):
    return 0 if params.family.is_s2n else 1


def oracle_integrate(params, state0, s_max: float, config: OracleConfig | None = None,
                     stop_at_exit: bool = False) -> OracleTrajectory:
    """Fixed-step RK4 from ``state0`` up to ``s_max`` (or the first box exit)."""
    cfg = config or OracleConfig()
    kind = _family_code(params)
    box = (1 if kind == 0 else 2) if stop_at_exit else 0
    n_steps = int(math.ceil(s_max / cfg.step))
    max_records = n_steps // cfg.record_every + 3
    y0 = np.asarray(state0, dtype=float)
    s, y, code, s_end, y_end = _run(kind, params.family.n, params.lam, y0, cfg.step,
                                    float(s_max), box, cfg.record_every, max_records)
    if code == _SINGULAR:
        raise SingularCoordinateError(f"oracle hit a singular state near s={s_end:.12g}")
    dy = np.empty_like(y)
    for k in range(len(y)):
        _field(kind, params.family.n, params.lam, y[k], dy[k])
    return OracleTrajectory(s.copy(), y.copy(), dy, _EVENT_NAMES.get(code), float(s_end),
                            y_end.copy())


def oracle_shot(params, r0: float, config: OracleConfig | None = None,
                s_max: float | None = None) -> OracleTrajectory:
    """Reference shot from ``(r0, pi/4, -pi/2)`` run to the box exit."""
    if s_max is None:
        # dalpha/ds >= lambda inside the box, so the exit comes before pi/(2 lambda)
        s_max = math.pi / (2 * params.lam) + 1.0
    return oracle_integrate(params, (r0, math.pi / 4, -math.pi / 2), s_max, config,
                            stop_at_exit=True)

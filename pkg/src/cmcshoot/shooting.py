"""Single shots from the mirror ``theta = pi/4`` and the bisection solvers.

A shot starts at ``(r0, pi/4, -pi/2)`` and runs until it leaves the
shooting box: through ``alpha = 0`` or through the wall (``r = pi/2`` for
``S^{2n}``, ``tan r cos theta = 1`` for ``S^{3n-1}``).  The closed
generating curves come from initial radii where the trajectory reaches the
wall orthogonally.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .errors import (
    BracketNotFound,
    DomainError,
    InconsistentClassification,
    MonitorViolation,
    NonConvergence,
)
from .geometry import beta
from .ode import DenseTrajectory, EventHit, IntegratorConfig, integrate_until_event

logger = logging.getLogger(__name__)

QUARTER_PI = math.pi / 4
HALF_PI = math.pi / 2

#: threshold on lambda separating the two regimes of the S^{2n} analysis
S2N_LAMBDA_SPLIT = 4 / math.pi
#: same threshold for S^{3n-1}
S3N_LAMBDA_SPLIT = 2.0

#: required accuracy of the matching condition at a converged shot
RESIDUAL_TOL = 1e-6
MONOTONE_TOL = 1e-12
THETA_BOUND_SLACK = 1e-8
ARC_BOUND_SLACK = 1e-8


class ExitClass(str, enum.Enum):
    AlphaZero = "AlphaZero"
    RWall = "RWall"
    GammaWall = "GammaWall"
    ThetaGuardFault = "ThetaGuardFault"
    Budget = "Budget"

    @property
    def is_wall(self) -> bool:
        return self in (ExitClass.RWall, ExitClass.GammaWall)


_EVENT_CLASS = {
    dyn.ALPHA_ZERO: ExitClass.AlphaZero,
    dyn.R_WALL: ExitClass.RWall,
    dyn.GAMMA_WALL: ExitClass.GammaWall,
    dyn.THETA_GUARD: ExitClass.ThetaGuardFault,
}


def c_n(n: int) -> float:
    """Exit-radius constant ``2 exp(pi/(4n-4) cot(1/(3n)))`` for small initial radii."""
    return 2.0 * math.exp(math.pi / (4 * n - 4) / math.tan(1.0 / (3 * n)))


# -- monitors ---------------------------------------------------------------


@dataclass
class MonitorResult:
    """Outcome of one bound check along a trajectory.

    ``worst_margin`` is the smallest slack seen (negative means violated);
    ``index``/``s`` locate it.  Monitors whose hypotheses do not hold for the
    shot are recorded with ``applicable = False`` and count as passed.
    """

    name: str
    applicable: bool
    passed: bool
    worst_margin: float | None = None
    index: int | None = None
    s: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "applicable": self.applicable,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "index": self.index,
            "s": self.s,
            "note": self.note,
        }


@dataclass
class MonitorReport:
    results: dict[str, MonitorResult] = field(default_factory=dict)

    def add(self, res: MonitorResult):
        self.results[res.name] = res

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failures(self) -> list[MonitorResult]:
        return [r for r in self.results.values() if not r.passed]

    def __getitem__(self, name) -> MonitorResult:
        return self.results[name]

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in sorted(self.results.items())}


def _not_applicable(name, why):
    return MonitorResult(name, False, True, note=why)


def _worst(name, margins, s, strict_positive=False):
    i = int(np.argmin(margins))
    m = float(margins[i])
    ok = m > 0.0 if strict_positive else m >= 0.0
    return MonitorResult(name, True, ok, m, i, float(s[i]))


def monitor_monotonicity(params, traj: DenseTrajectory) -> MonitorResult:
    """``dr/ds >= 0``, ``dtheta/ds <= 0``, ``dalpha/ds > 0`` at every accepted step."""
    d = np.array([dyn.rhs(params, y) for y in traj.y])
    slack = np.minimum(np.minimum(d[:, 0] + MONOTONE_TOL, MONOTONE_TOL - d[:, 1]), d[:, 2])
    res = _worst("monotonicity", slack, traj.s)
    res.passed = bool(np.all(d[:, 0] >= -MONOTONE_TOL) and np.all(d[:, 1] <= MONOTONE_TOL)
                      and np.all(d[:, 2] > 0.0))
    return res


def monitor_theta_lower(params, r0, traj) -> MonitorResult:
    """``theta(s) >= pi/4 - 1/(lam sin r0)`` for large lambda and large r0."""
    name = "theta_lower_bound"
    split = S2N_LAMBDA_SPLIT if params.family.is_s2n else S3N_LAMBDA_SPLIT
    if params.lam <= split:
        return _not_applicable(name, f"needs lambda > {split:.6g}")
    gap = 1.0 / (params.lam * math.sin(r0))
    if not gap < QUARTER_PI:
        return _not_applicable(name, "needs 1/(lambda sin r0) < pi/4")
    margins = traj.y[:, 1] - (QUARTER_PI - gap) + THETA_BOUND_SLACK
    return _worst(name, margins, traj.s)


def _first_crossing(traj: DenseTrajectory, target: float) -> float | None:
    """Arc length where ``r`` first reaches ``target`` (``r`` is nondecreasing)."""
    r = traj.y[:, 0]
    idx = np.nonzero(r >= target)[0]
    if len(idx) == 0:
        return None
    j = int(idx[0])
    if j == 0:
        return float(traj.s[0])
    a, b = float(traj.s[j - 1]), float(traj.s[j])
    while b - a > 1e-13:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if traj(m)[0] < target:
            a = m
        else:
            b = m
    return b


def monitor_two_r(params, r0, traj) -> MonitorResult:
    """Once ``r >= 2 r0``, ``theta < pi/4 - 1/(6n)`` (small lambda, small r0)."""
    name = "two_r_theta_bound"
    s2n = params.family.is_s2n
    split = S2N_LAMBDA_SPLIT if s2n else S3N_LAMBDA_SPLIT
    r_cap = QUARTER_PI if s2n else math.pi / 8
    if params.lam > split:
        return _not_applicable(name, f"needs lambda <= {split:.6g}")
    if not r0 < r_cap:
        return _not_applicable(name, f"needs r0 < {r_cap:.6g}")
    bound = QUARTER_PI - 1.0 / (6 * params.family.n)
    s1 = _first_crossing(traj, 2.0 * r0)
    if s1 is None:
        return MonitorResult(name, True, True, None, note="r never reaches 2 r0")
    mask = traj.y[:, 0] >= 2.0 * r0
    s_pts = np.concatenate([[s1], traj.s[mask]])
    th = np.concatenate([[traj(s1)[1]], traj.y[mask, 1]])
    res = _worst(name, bound - th, s_pts, strict_positive=True)
    res.index = None if res.index == 0 else int(np.nonzero(mask)[0][res.index - 1])
    return res


def exit_radius_hypothesis(params, r0) -> tuple[bool, str]:
    """Whether the explicit small-r0 exit-radius estimate applies."""
    s2n = params.family.is_s2n
    split = S2N_LAMBDA_SPLIT if s2n else S3N_LAMBDA_SPLIT
    r_cap = QUARTER_PI if s2n else math.pi / 8
    wall = HALF_PI if s2n else QUARTER_PI
    if params.lam > split:
        return False, f"needs lambda <= {split:.6g}"
    if not r0 < r_cap:
        return False, f"needs r0 < {r_cap:.6g}"
    if not c_n(params.family.n) * r0 < wall:
        return False, f"needs c_n r0 < {wall:.6g}"
    return True, ""


def monitor_exit_radius(params, r0, exit_class, state_exit, s_star) -> MonitorResult:
    """Small ``r0`` exits through ``alpha = 0`` with ``r(s*) <= c_n r0``."""
    name = "exit_radius_bound"
    ok, why = exit_radius_hypothesis(params, r0)
    if not ok:
        return _not_applicable(name, why)
    margin = c_n(params.family.n) * r0 - float(state_exit[0])
    res = MonitorResult(name, True, margin >= 0.0, margin, None, s_star)
    if exit_class is not ExitClass.AlphaZero:
        res.passed = False
        res.note = f"exit was {exit_class.value}, expected AlphaZero"
    return res


def monitor_arc_length(params, s_star) -> MonitorResult:
    """``s* <= pi/(2 lam)`` (S^{2n} only)."""
    name = "arc_length_bound"
    if not params.family.is_s2n:
        return _not_applicable(name, "stated for the S^{2n} family only")
    margin = HALF_PI / params.lam + ARC_BOUND_SLACK - s_star
    return MonitorResult(name, True, margin >= 0.0, margin, None, s_star)


def evaluate_monitors(params, r0, traj, exit_class, state_exit, s_star) -> MonitorReport:
    rep = MonitorReport()
    rep.add(monitor_monotonicity(params, traj))
    rep.add(monitor_theta_lower(params, r0, traj))
    rep.add(monitor_two_r(params, r0, traj))
    rep.add(monitor_exit_radius(params, r0, exit_class, state_exit, s_star))
    rep.add(monitor_arc_length(params, s_star))
    return rep


# -- shots ------------------------------------------------------------------


@dataclass
class ShotResult:
    params: dyn.Params
    r0: float
    exit: ExitClass
    s_star: float
    state_exit: dyn.ShootingState
    trajectory: DenseTrajectory
    monitors: MonitorReport
    hits: list[EventHit] = field(default_factory=list)

    @property
    def alpha_residual(self) -> float:
        return float(self.state_exit.alpha)

    @property
    def r_residual(self) -> float:
        return float(self.state_exit.r - HALF_PI)

    @property
    def beta_residual(self) -> float:
        """``alpha(s*) - beta(r(s*), theta(s*))``."""
        return float(self.state_exit.alpha - beta(self.state_exit.r, self.state_exit.theta))

    def to_dict(self) -> dict:
        d = {
            "family": self.params.family.kind.value,
            "n": self.params.family.n,
            "lambda": self.params.lam,
            "r0": self.r0,
            "exit": self.exit.value,
            "s_star": self.s_star,
            "exit_state": {
                "r": float(self.state_exit.r),
                "theta": float(self.state_exit.theta),
                "alpha": float(self.state_exit.alpha),
            },
            "events": [h.event for h in self.hits],
            "monitors": self.monitors.to_dict(),
        }
        if self.exit is ExitClass.GammaWall:
            d["alpha_minus_beta"] = self.beta_residual
        return d


def _classify(hits: list[EventHit]) -> ExitClass:
    names = [h.event for h in hits]
    if dyn.THETA_GUARD in names:
        return ExitClass.ThetaGuardFault
    return _EVENT_CLASS[names[0]]


def check_r0(params, r0: float):
    hi = params.family.r0_max
    if not (0.0 < r0 < hi):
        raise DomainError(f"r0 must lie in (0, {hi:.12g}) for {params.family}, got {r0!r}")


def shoot(params: dyn.Params, r0: float, config: IntegratorConfig | None = None,
          strict: bool = False) -> ShotResult:
    """Integrate from ``(r0, pi/4, -pi/2)`` until the trajectory leaves its box."""
    check_r0(params, r0)
    cfg = config or IntegratorConfig()
    box = dyn.DomainBox.for_family(params.family)
    out = integrate_until_event(dyn.vector_field(params), dyn.start_state(r0),
                                dyn.events(box), cfg)
    traj = out.trajectory
    if out.status == "budget":
        exit_class, hits = ExitClass.Budget, []
        s_star, y_end = traj.s_end, traj.y_end
    else:
        hits = out.hits
        exit_class = _classify(hits)
        s_star, y_end = hits[0].s_hit, hits[0].state_hit
    state_exit = dyn.ShootingState(*map(float, y_end))
    monitors = evaluate_monitors(params, r0, traj, exit_class, state_exit, s_star)
    shot = ShotResult(params, r0, exit_class, float(s_star), state_exit, traj, monitors, hits)
    for bad in monitors.failures():
        msg = (f"monitor {bad.name} failed for {params.family}, lambda={params.lam:g}, "
               f"r0={r0!r}: margin {bad.worst_margin!r} {bad.note}")
        if strict:
            raise MonitorViolation(msg)
        logger.warning(msg)
    return shot


# -- brackets and bisection --------------------------------------------------


def _wall_class(params) -> ExitClass:
    return ExitClass.RWall if params.family.is_s2n else ExitClass.GammaWall


def _checked(shot: ShotResult) -> ShotResult:
    if shot.exit in (ExitClass.ThetaGuardFault, ExitClass.Budget):
        raise NonConvergence(f"shot at r0={shot.r0!r} ended with {shot.exit.value}")
    return shot


SCAN_DEPTH = 40


def bracket(params: dyn.Params, config: IntegratorConfig | None = None,
            scale: float = 0.25) -> tuple[float, float]:
    """Find ``r0_low`` exiting through ``alpha = 0`` and ``r0_high`` exiting at the wall.

    Scans ``scale * r0_max * 2^-k`` upwards from zero and
    ``r0_max - scale * r0_max * 2^-k`` towards the upper end.
    """
    if not isinstance(params, dyn.Params):
        raise TypeError("params must be a Params instance")
    hi_end = params.family.r0_max
    a = scale * hi_end
    wall = _wall_class(params)
    low = high = None
    for k in range(SCAN_DEPTH + 1):
        r0 = a * 2.0**-k
        if _checked(shoot(params, r0, config)).exit is ExitClass.AlphaZero:
            low = r0
            break
    for k in range(SCAN_DEPTH + 1):
        r0 = hi_end - a * 2.0**-k
        if r0 >= hi_end:
            break
        if _checked(shoot(params, r0, config)).exit is wall:
            high = r0
            break
    if low is None or high is None or not low < high:
        raise BracketNotFound(
            f"no bracket for {params.family}, lambda={params.lam:g}: low={low}, high={high}"
        )
    return low, high


MAX_BISECT = 200


def _bisect_class(params, low, high, tol_r0, config, history):
    """Shrink ``[low, high]`` keeping an AlphaZero exit at ``low`` and a wall exit at ``high``."""
    wall = _wall_class(params)
    for _ in range(MAX_BISECT):
        if high - low <= tol_r0:
            return low, high
        mid = 0.5 * (low + high)
        if mid <= low or mid >= high:
            return low, high
        ex = _checked(shoot(params, mid, config)).exit
        history.append((mid, ex.value))
        if ex is ExitClass.AlphaZero:
            low = mid
        elif ex is wall:
            high = mid
        else:
            raise NonConvergence(f"unexpected exit {ex.value} at r0={mid!r}", history)
    raise NonConvergence("bisection iteration budget exhausted", history)


def _confirm_ends(params, low, high, config, history):
    wall = _wall_class(params)
    e_low = _checked(shoot(params, low, config)).exit
    e_high = _checked(shoot(params, high, config)).exit
    history.extend([(low, e_low.value), (high, e_high.value)])
    if e_low is not ExitClass.AlphaZero or e_high is not wall:
        raise InconsistentClassification(
            f"bracket ends classify as {e_low.value} / {e_high.value}", history
        )


def solve_s2n(params: dyn.Params, tol_r0: float = 1e-10,
              config: IntegratorConfig | None = None,
              bracket_: tuple[float, float] | None = None) -> tuple[float, ShotResult]:
    """Initial radius whose trajectory leaves ``B`` through ``{alpha=0} & {r=pi/2}``.

    Bisects on the exit class; the returned shot is taken at the midpoint of
    the final bracket.
    """
    if not params.family.is_s2n:
        raise DomainError("solve_s2n needs the S^{2n} family")
    history: list = []
    low, high = bracket_ or bracket(params, config)
    _confirm_ends(params, low, high, config, history)
    low, high = _bisect_class(params, low, high, tol_r0, config, history)
    r0 = 0.5 * (low + high)
    shot = shoot(params, r0, config)
    res_a = abs(min(shot.alpha_residual, 0.0)) if shot.exit.is_wall else abs(shot.alpha_residual)
    res_r = abs(shot.r_residual)
    if not (res_a <= RESIDUAL_TOL and res_r <= RESIDUAL_TOL):
        raise NonConvergence(
            f"residuals |alpha|={res_a:.3e}, |r-pi/2|={res_r:.3e} exceed {RESIDUAL_TOL}", history
        )
    logger.info("s2n solve: r0*=%.15g after %d shots", r0, len(history))
    return r0, shot


def _h(shot: ShotResult) -> float:
    # reaching alpha = 0 first means alpha is still above beta <= 0
    if shot.exit is ExitClass.AlphaZero:
        return math.inf
    return shot.beta_residual


def solve_s3n(params: dyn.Params, tol_r0: float = 1e-10,
              config: IntegratorConfig | None = None,
              bracket_: tuple[float, float] | None = None) -> tuple[float, ShotResult]:
    """Initial radius whose trajectory meets ``{tan r cos theta = 1}`` orthogonally.

    Stage one bisects on the exit class to find the boundary between
    ``alpha = 0`` exits and wall exits; stage two bisects
    ``alpha(s*) - beta(r(s*), theta(s*))`` over wall exits, which is
    positive next to that boundary and negative close to ``arctan sqrt 2``.
    """
    if params.family.is_s2n:
        raise DomainError("solve_s3n needs the S^{3n-1} family")
    history: list = []
    low, high = bracket_ or bracket(params, config)
    _confirm_ends(params, low, high, config, history)
    _, b = _bisect_class(params, low, high, tol_r0, config, history)

    # stage two: need a wall exit with alpha < beta at the upper end
    top = high
    h_top = _h(_checked(shoot(params, top, config)))
    history.append((top, h_top))
    k = 1
    hi_end = params.family.r0_max
    while not h_top < 0.0:
        if k > SCAN_DEPTH:
            raise NonConvergence("no wall exit with alpha < beta near arctan(sqrt 2)", history)
        top = hi_end - (hi_end - high) * 2.0**-k
        h_top = _h(_checked(shoot(params, top, config)))
        history.append((top, h_top))
        k += 1
    h_b = _h(_checked(shoot(params, b, config)))
    history.append((b, h_b))
    if not h_b >= 0.0:
        raise NonConvergence(f"stage-two lower end has alpha - beta = {h_b:.3e} < 0", history)

    lo2, hi2 = b, top
    for _ in range(MAX_BISECT):
        if hi2 - lo2 <= tol_r0:
            break
        mid = 0.5 * (lo2 + hi2)
        if mid <= lo2 or mid >= hi2:
            break
        hm = _h(_checked(shoot(params, mid, config)))
        history.append((mid, hm))
        if hm >= 0.0:
            lo2 = mid
        else:
            hi2 = mid
    else:
        raise NonConvergence("stage-two iteration budget exhausted", history)
    r0 = 0.5 * (lo2 + hi2)
    shot = shoot(params, r0, config)
    if shot.exit is not ExitClass.GammaWall or not abs(shot.beta_residual) <= RESIDUAL_TOL:
        raise NonConvergence(
            f"stage two ended with exit {shot.exit.value}, alpha - beta = {_h(shot):.3e}", history
        )
    logger.info("s3n solve: r0*=%.15g after %d shots", r0, len(history))
    return r0, shot

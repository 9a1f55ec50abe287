"""Independent checks of the solver output."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import dynamics as dyn
from .errors import SingularCoordinateError
from .geometry import Family, FamilyKind, mean_curvature
from .ode import IntegratorConfig
from .oracle import OracleConfig, oracle_shot
from .shooting import S2N_LAMBDA_SPLIT, S3N_LAMBDA_SPLIT, ExitClass, shoot

logger = logging.getLogger(__name__)

FD_POINTS = 2048


class HResiduals(NamedTuple):
    algebraic: float
    finite_difference: float
    skipped: int

    @property
    def worst(self) -> float:
        return max(self.algebraic, self.finite_difference)


def _uniform_states(obj, points: int):
    """``(s, states, periodic)`` on a uniform arc-length grid."""
    if hasattr(obj, "states") and hasattr(obj, "closed"):
        return np.asarray(obj.s), obj.states, bool(obj.closed)
    traj = getattr(obj, "trajectory", obj)
    s_end = getattr(obj, "s_star", None)
    if s_end is None:
        s_end = traj.s_end
    s = np.linspace(0.0, s_end, points + 1)
    return s, np.asarray(traj(s)), False


def _fd_derivative(s, alpha, periodic: bool):
    """Fourth-order central differences; interior samples only unless periodic."""
    if periodic:
        # drop the repeated closing sample and wrap around
        a = alpha[:-1]
        h = (s[-1] - s[0]) / len(a)
        ap1, am1 = np.roll(a, -1), np.roll(a, 1)
        ap2, am2 = np.roll(a, -2), np.roll(a, 2)
        wrap = lambda d: (d + math.pi) % (2 * math.pi) - math.pi  # noqa: E731
        d = (8 * wrap(ap1 - am1) - wrap(ap2 - am2)) / (12 * h)
        return np.arange(len(a)), d
    h = s[1] - s[0]
    idx = np.arange(2, len(s) - 2)
    d = (8 * (alpha[idx + 1] - alpha[idx - 1]) - (alpha[idx + 2] - alpha[idx - 2])) / (12 * h)
    return idx, d


def check_H(obj, params: dyn.Params, points: int = FD_POINTS) -> HResiduals:
    """Largest ``|H - lam|`` along a curve or trajectory, computed two ways.

    The algebraic value takes ``alpha'`` from the ODE; the finite-difference
    value takes it from the sampled tangent angles.  Singular samples are
    skipped and counted.
    """
    s, states, periodic = _uniform_states(obj, points)
    lam = params.lam
    fam = params.family
    alg = 0.0
    skipped = 0
    for st in states:
        try:
            h = mean_curvature(fam, st, dyn.rhs_alpha(params, st))
        except SingularCoordinateError:
            skipped += 1
            continue
        alg = max(alg, abs(h - lam))

    fd = 0.0
    idx, d = _fd_derivative(s, states[:, 2], periodic)
    for i, ap in zip(idx, d):
        try:
            h = mean_curvature(fam, states[i], float(ap))
        except SingularCoordinateError:
            skipped += 1
            continue
        fd = max(fd, abs(h - lam))
    return HResiduals(float(alg), float(fd), skipped)


# -- claim suite ---------------------------------------------------------------

#: Claim id -> the statement it checks, quoted from the source proofs.
CLAIM_ANCHORS = {
    "s2n:monotone-profile": "dr/ds >= 0, dtheta/ds <= 0, dalpha/ds > 0 and theta(s) > 0 for all s in [0, s*]",
    "s3n-1:monotone-profile": "dr/ds >= 0, dtheta/ds <= 0, dalpha/ds > 0 on the domain B-hat",
    "s2n:small-r0-exits-alpha": "lambda > 4/pi, r0 sufficiently small: alpha(s*) = 0",
    "s3n-1:small-r0-exits-alpha": "lambda > 2, r0 sufficiently small: alpha(s*) = 0",
    "s2n:theta-lower-bound": "0 <= cot(2 theta(s)) <= cot(pi/2 - 2/(lambda sin r0)) for r0 in (r_lambda, pi/2)",
    "s3n-1:theta-lower-bound": "0 <= cot(2 theta(s)) <= cot(pi/2 - 2/(lambda sin r0)) for r0 in (r_lambda, arctan sqrt 2)",
    "s2n:large-r0-exits-wall": "r0 sufficiently close to pi/2: r(s*) = pi/2",
    "s3n-1:large-r0-exits-wall": "r0 sufficiently close to arctan sqrt 2: tan r(s*) cos theta(s*) = 1",
    "s2n:theta-drop-after-doubling": "lambda <= 4/pi, r0 < pi/4: if r(s1) >= 2 r0 then theta(s1) < pi/4 - 1/(6n)",
    "s3n-1:theta-drop-after-doubling": "lambda <= 2, r0 < pi/8: if r(s1) >= 2 r0 then theta(s1) < pi/4 - 1/(6n)",
    "s2n:exit-radius": "lambda <= 4/pi, c_n r0 < pi/2: alpha(s*) = 0 and r(s*) <= c_n r0",
    "s3n-1:exit-radius": "lambda <= 2, c_n r0 < pi/4: alpha(s*) = 0 and r(s*) <= c_n r0",
    "s2n:arc-length-bound": "s* <= pi/(2 lambda), hence L(C) <= 2 pi/lambda",
    "s2n:oracle-agreement": "fixed-step reference run agrees with the adaptive shot to 1e-7",
    "s3n-1:oracle-agreement": "fixed-step reference run agrees with the adaptive shot to 1e-7",
}

ORACLE_AGREEMENT_TOL = 1e-7
SUITE_ORACLE_STEP = 1e-5
SMALL_R0 = (0.005, 0.01)
LARGE_R0_OFFSET = 0.01


@dataclass
class ClaimResult:
    claim_id: str
    anchor: str
    scope: dict
    status: str
    worst_margin: float | None
    evidence: dict

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "anchor": self.anchor,
            "scope": self.scope,
            "status": self.status,
            "worst_margin": self.worst_margin,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class GridPoint:
    family: Family
    lam: float
    r0: float

    @property
    def params(self) -> dyn.Params:
        return dyn.Params(self.family, self.lam)


def default_grid(ns=(2, 3, 4), lams=None, kinds=(FamilyKind.S2n, FamilyKind.S3nMinus1)):
    """Both families, small initial radii and one radius close to the upper end."""
    if lams is None:
        lams = (0.5, 1.0, 4.0 / math.pi + 0.1, 2.0, 3.0, 5.0)
    grid = []
    for kind in kinds:
        for n in ns:
            fam = Family(kind, n)
            for lam in lams:
                for r0 in (*SMALL_R0, fam.r0_max - LARGE_R0_OFFSET):
                    grid.append(GridPoint(fam, float(lam), float(r0)))
    return grid


def _from_monitor(claim_id, scope, mon) -> ClaimResult | None:
    if not mon.applicable:
        return None
    return ClaimResult(claim_id, CLAIM_ANCHORS[claim_id], scope,
                       "pass" if mon.passed else "fail", mon.worst_margin,
                       {"index": mon.index, "s": mon.s, "note": mon.note})


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def oracle_gap(shot, config: OracleConfig | None = None) -> tuple[float, float, float]:
    """Sup-norm state gap, exit-state gap and ``|s* difference|`` against the oracle."""
    ref = oracle_shot(shot.params, shot.r0, config)
    s_common = min(ref.s_end, shot.s_star)
    mask = ref.s <= s_common
    sup = float(np.max(np.abs(np.asarray(shot.trajectory(ref.s[mask])) - ref.y[mask])))
    exit_gap = float(np.max(np.abs(np.asarray(shot.state_exit) - ref.y_end)))
    same_exit = ref.event == {
        ExitClass.AlphaZero: dyn.ALPHA_ZERO,
        ExitClass.RWall: dyn.R_WALL,
        ExitClass.GammaWall: dyn.GAMMA_WALL,
        ExitClass.ThetaGuardFault: dyn.THETA_GUARD,
    }.get(shot.exit)
    if not same_exit:
        exit_gap = math.inf
    return sup, exit_gap, abs(ref.s_end - shot.s_star)


def claims_for_point(point: GridPoint, config: IntegratorConfig | None = None,
                     oracle: bool = True) -> list[ClaimResult]:
    """Shoot once and turn every applicable bound into a :class:`ClaimResult`."""
    params = point.params
    fam = params.family
    tag = fam.kind.value
    scope = {"family": tag, "n": fam.n, "lambda": point.lam, "r0": point.r0}
    shot = shoot(params, point.r0, config)
    mons = shot.monitors
    split = S2N_LAMBDA_SPLIT if fam.is_s2n else S3N_LAMBDA_SPLIT
    small = point.r0 in SMALL_R0
    out: list[ClaimResult | None] = []

    out.append(_from_monitor(f"{tag}:monotone-profile", scope, mons["monotonicity"]))
    if small and params.lam > split:
        cid = f"{tag}:small-r0-exits-alpha"
        out.append(ClaimResult(cid, CLAIM_ANCHORS[cid], scope,
                               _status(shot.exit is ExitClass.AlphaZero), None,
                               {"exit": shot.exit.value, "s": shot.s_star}))
    if not small:
        cid = f"{tag}:large-r0-exits-wall"
        out.append(ClaimResult(cid, CLAIM_ANCHORS[cid], scope,
                               _status(shot.exit.is_wall), None,
                               {"exit": shot.exit.value, "s": shot.s_star}))
        out.append(_from_monitor(f"{tag}:theta-lower-bound", scope, mons["theta_lower_bound"]))
    out.append(_from_monitor(f"{tag}:theta-drop-after-doubling", scope,
                             mons["two_r_theta_bound"]))
    out.append(_from_monitor(f"{tag}:exit-radius", scope, mons["exit_radius_bound"]))
    if fam.is_s2n:
        out.append(_from_monitor(f"{tag}:arc-length-bound", scope, mons["arc_length_bound"]))
    if oracle:
        sup, exit_gap, ds = oracle_gap(shot, OracleConfig(step=SUITE_ORACLE_STEP))
        worst = max(sup, exit_gap)
        cid = f"{tag}:oracle-agreement"
        out.append(ClaimResult(cid, CLAIM_ANCHORS[cid], scope,
                               _status(worst <= ORACLE_AGREEMENT_TOL),
                               ORACLE_AGREEMENT_TOL - worst,
                               {"sup_gap": sup, "exit_gap": exit_gap, "s_star_gap": ds}))
    return [c for c in out if c is not None]


def run_claim_suite(grid=None, config: IntegratorConfig | None = None,
                    oracle: bool = True) -> list[ClaimResult]:
    """Claims for every grid point, ordered by grid index."""
    grid = default_grid() if grid is None else grid
    results = []
    for point in grid:
        results.extend(claims_for_point(point, config, oracle))
    return results


def claim_report(results) -> dict:
    """Report keyed by claim id; stable ordering so the JSON is byte-stable."""
    report: dict = {}
    for c in results:
        entry = report.setdefault(c.claim_id, {"anchor": c.anchor, "results": []})
        entry["results"].append(c.to_dict())
    return {
        "claims": {k: report[k] for k in sorted(report)},
        "total": len(results),
        "failed": sum(not c.passed for c in results),
    }


def report_json(results) -> str:
    return json.dumps(claim_report(results), indent=2, sort_keys=True) + "\n"

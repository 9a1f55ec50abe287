"""Closed generating curves from one converged arc.

The arc runs from the mirror ``theta = pi/4`` to a second mirror
(``r = pi/2`` on S^{2n}, ``tan r cos theta = 1`` on S^{3n-1}).  Both mirrors
are fixed sets of orthogonal maps of the ambient quotient triple, so the
closed curve is the orbit of the arc under the group they generate.  Copy
``k`` is ``g_k(arc)`` with ``g_1 = I, g_2 = R2, g_3 = R2 R1, g_4 = R2 R1 R2``
and so on, traversed backwards on every other copy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .errors import AssemblyError
from .geometry import Family, OrbitPoint, beta
from .polyline import is_simple
from .verify import check_H

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-6
SEAM_TOL = 1e-6
EXIT_RESIDUAL_TOL = 1e-6
MAX_COPIES = 12
RESAMPLE_POINTS = 2048


@dataclass
class GeneratingCurve:
    """Uniformly resampled closed curve in the ``(r, theta)`` chart.

    The last sample repeats the first one (up to the closure gap).
    """

    family: Family
    lam: float
    s: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    closed: bool
    length: float
    copies: int = 1
    closure_gap: float = 0.0
    seam_defects: list = field(default_factory=list)
    seam_gaps: list = field(default_factory=list)
    r0_star: float | None = None
    exit_residuals: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.s)

    @property
    def params(self) -> dyn.Params:
        return dyn.Params(self.family, self.lam)

    @property
    def states(self) -> np.ndarray:
        return np.column_stack([self.r, self.theta, self.alpha])

    @property
    def samples(self) -> list:
        return [(float(s), OrbitPoint(float(r), float(t)), float(a))
                for s, r, t, a in zip(self.s, self.r, self.theta, self.alpha)]


def _triples(r, theta):
    sr = np.sin(r)
    return np.column_stack([sr * np.cos(theta), sr * np.sin(theta), np.cos(r)])


def _tangents(r, theta, alpha):
    cr, sr = np.cos(r), np.sin(r)
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.column_stack([ca * cr * ct - sa * st, ca * cr * st + sa * ct, -ca * sr])


def _chart(p, t):
    r = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
    theta = np.arctan2(p[:, 1], p[:, 0])
    cr, sr = np.cos(r), np.sin(r)
    ct, st = np.cos(theta), np.sin(theta)
    along_r = t[:, 0] * cr * ct + t[:, 1] * cr * st - t[:, 2] * sr
    along_t = -t[:, 0] * st + t[:, 1] * ct
    return r, theta, np.arctan2(along_t, along_r)


def _angle_between(a, b) -> float:
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))


def exit_residuals(shot) -> dict:
    st = shot.state_exit
    if shot.params.family.is_s2n:
        return {"alpha": abs(st.alpha), "r_minus_half_pi": abs(st.r - dyn.HALF_PI)}
    return {
        "alpha_minus_beta": abs(st.alpha - beta(st.r, st.theta)),
        "gamma": abs(dyn.e_gamma(st)),
    }


def _group_words(r1, r2):
    g = np.eye(3)
    yield g
    gens = (r2, r1)
    k = 0
    while True:
        g = g @ gens[k % 2]
        yield g
        k += 1


def assemble(shot, density: int = 1, samples: int = RESAMPLE_POINTS) -> GeneratingCurve:
    """Orbit of a converged arc under its two mirror reflections.

    Reflections are added until the curve returns to its starting point
    (checked numerically); failing to close within ``MAX_COPIES`` copies
    raises :class:`AssemblyError`.  ``density`` multiplies the sample count.
    """
    params = shot.params
    family = params.family
    res = exit_residuals(shot)
    worst = max(res.values())
    if not worst <= EXIT_RESIDUAL_TOL:
        raise AssemblyError(f"exit residuals {res} exceed {EXIT_RESIDUAL_TOL}")

    r1 = dyn.MIRRORS["theta"]
    r2 = dyn.MIRRORS["r"] if family.is_s2n else dyn.MIRRORS["xz"]
    s_star = shot.s_star
    traj = shot.trajectory

    # closing needs the group order; find it from the endpoints before sampling
    a_start = np.asarray(traj(0.0))
    a_end = np.asarray(shot.state_exit, dtype=float)
    ends = _triples(np.array([a_start[0], a_end[0]]), np.array([a_start[1], a_end[1]]))
    start_p = ends[0]
    words = []
    for k, g in enumerate(_group_words(r1, r2)):
        if k >= MAX_COPIES:
            raise AssemblyError(f"curve did not close within {MAX_COPIES} arc copies")
        words.append(g)
        end_p = g @ (ends[1] if k % 2 == 0 else ends[0])
        if k >= 1 and np.max(np.abs(end_p - start_p)) <= CLOSURE_TOL:
            break
    copies = len(words)

    m = math.ceil(samples * density / copies)
    u = np.linspace(0.0, s_star, m + 1)
    arc = np.asarray(traj(u))
    arc[-1] = a_end
    p_arc = _triples(arc[:, 0], arc[:, 1])
    t_arc = _tangents(arc[:, 0], arc[:, 1], arc[:, 2])

    pts, tans = [], []
    for k, g in enumerate(words):
        if k % 2 == 0:
            p, t = p_arc @ g.T, t_arc @ g.T
        else:
            p, t = p_arc[::-1] @ g.T, -t_arc[::-1] @ g.T
        pts.append(p)
        tans.append(t)

    defects, gaps = [], []
    for k in range(copies):
        nxt = (k + 1) % copies
        gaps.append(float(np.max(np.abs(pts[k][-1] - pts[nxt][0]))))
        defects.append(_angle_between(tans[k][-1], tans[nxt][0]))
    for k, (d, gap) in enumerate(zip(defects, gaps)):
        if gap > CLOSURE_TOL or d > SEAM_TOL:
            raise AssemblyError(
                f"seam {k} mismatch: position gap {gap:.3e}, tangent defect {d:.3e} rad"
            )

    p_all = np.vstack([p[:-1] for p in pts] + [pts[-1][-1:]])
    t_all = np.vstack([t[:-1] for t in tans] + [tans[-1][-1:]])
    r, theta, alpha = _chart(p_all, t_all)
    alpha = np.unwrap(alpha)
    closure = float(max(abs(r[-1] - r[0]), abs(theta[-1] - theta[0])))
    length = copies * s_star
    s = np.concatenate([k * s_star + u[:-1] for k in range(copies)] + [[length]])
    logger.info("assembled %d copies, closure gap %.3e, worst seam %.3e rad",
                copies, closure, max(defects))
    return GeneratingCurve(
        family=family,
        lam=params.lam,
        s=s,
        r=r,
        theta=theta,
        alpha=alpha,
        closed=closure <= CLOSURE_TOL,
        length=length,
        copies=copies,
        closure_gap=closure,
        seam_defects=defects,
        seam_gaps=gaps,
        r0_star=shot.r0,
        exit_residuals=res,
    )


def assemble_s2n(shot, density: int = 1) -> GeneratingCurve:
    """Four copies glued across ``r = pi/2`` and ``theta = pi/4``."""
    if not shot.params.family.is_s2n:
        raise AssemblyError("assemble_s2n needs an S^{2n} arc")
    return assemble(shot, density)


def assemble_s3n(shot, density: int = 1) -> GeneratingCurve:
    """Orbit under the swaps x<->y and x<->z (a dihedral group of order 6)."""
    if shot.params.family.is_s2n:
        raise AssemblyError("assemble_s3n needs an S^{3n-1} arc")
    return assemble(shot, density)


# -- certificate -------------------------------------------------------------


@dataclass
class Certificate:
    closure_gap: float
    seam_defect: float
    simple: bool
    min_boundary_dist: float
    length: float
    r0_star: float | None
    h_residuals: dict
    closed: bool
    copies: int
    family: str
    n: int
    lam: float
    exit_residuals: dict

    def to_dict(self) -> dict:
        return {
            "closure_gap": self.closure_gap,
            "seam_defect": self.seam_defect,
            "simple": self.simple,
            "min_boundary_dist": self.min_boundary_dist,
            "length": self.length,
            "r0_star": self.r0_star,
            "h_residuals": dict(sorted(self.h_residuals.items())),
            "closed": self.closed,
            "copies": self.copies,
            "family": self.family,
            "n": self.n,
            "lambda": self.lam,
            "exit_residuals": dict(sorted(self.exit_residuals.items())),
        }


def boundary_distance(family: Family, r, theta) -> np.ndarray:
    """Chart distance of each sample to the edge of the open quotient."""
    r = np.asarray(r)
    theta = np.asarray(theta)
    d = np.minimum.reduce([theta, dyn.HALF_PI - theta, r, family.r_max - r])
    return d


def certify(curve: GeneratingCurve) -> Certificate:
    pts = np.column_stack([curve.r, curve.theta])
    if curve.closed:
        pts = pts[:-1]
    simple = is_simple(pts, closed=curve.closed)
    h = check_H(curve, curve.params)
    return Certificate(
        closure_gap=float(curve.closure_gap),
        seam_defect=float(max(curve.seam_defects, default=0.0)),
        simple=bool(simple),
        min_boundary_dist=float(np.min(boundary_distance(curve.family, curve.r, curve.theta))),
        length=float(curve.length),
        r0_star=curve.r0_star,
        h_residuals={"algebraic": h.algebraic, "finite_difference": h.finite_difference,
                     "skipped": h.skipped},
        closed=bool(curve.closed),
        copies=int(curve.copies),
        family=curve.family.kind.value,
        n=curve.family.n,
        lam=curve.lam,
        exit_residuals=dict(curve.exit_residuals),
    )

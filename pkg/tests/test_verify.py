from __future__ import annotations

import json
import math

import numpy as np
import pytest

from cmcshoot import dynamics as dyn
from cmcshoot.geometry import Family
from cmcshoot.shooting import shoot
from cmcshoot.verify import (
    CLAIM_ANCHORS,
    GridPoint,
    check_H,
    claims_for_point,
    default_grid,
    report_json,
    run_claim_suite,
)


def test_check_H_on_a_trajectory():
    p = dyn.Params(Family.s2n(2), 1.0)
    res = check_H(shoot(p, 0.9), p)
    assert res.algebraic <= 1e-12
    assert res.finite_difference <= 1e-6
    assert res.worst == max(res.algebraic, res.finite_difference)


def test_check_H_constant_sphere():
    from cmcshoot.ode import integrate_until_event

    n, lam = 2, 3.0
    p = dyn.Params(Family.s2n(n), lam)
    r = math.atan((2 * n - 1) / lam)
    # stop before theta reaches pi/2, where the orbit curvatures blow up
    traj = integrate_until_event(dyn.vector_field(p), (r, 0.1, math.pi / 2), [], s_max=1.0).trajectory
    res = check_H(traj, p)
    assert res.algebraic <= 1e-10
    assert res.finite_difference <= 1e-10


def test_check_H_skips_singular_samples(monkeypatch):
    from cmcshoot import verify
    from cmcshoot.errors import SingularCoordinateError

    p = dyn.Params(Family.s2n(2), 1.0)
    shot = shoot(p, 0.9)
    real = verify.mean_curvature

    def flaky(family, state, alpha_prime):
        if state[0] > 1.2:
            raise SingularCoordinateError("test")
        return real(family, state, alpha_prime)

    monkeypatch.setattr(verify, "mean_curvature", flaky)
    res = check_H(shot, p, points=200)
    s = np.linspace(0.0, shot.s_star, 201)
    far = int(np.sum(np.asarray(shot.trajectory(s))[:, 0] > 1.2))
    assert far > 0
    # algebraic pass sees every sample, finite-difference pass only the interior ones
    assert far <= res.skipped <= 2 * far
    assert res.worst <= 1e-6


def test_claim_examples():
    out = claims_for_point(GridPoint(Family.s2n(2), 2.0, 0.01))
    by_id = {c.claim_id: c for c in out}
    assert by_id["s2n:small-r0-exits-alpha"].passed
    assert by_id["s2n:small-r0-exits-alpha"].evidence["exit"] == "AlphaZero"
    assert by_id["s2n:arc-length-bound"].passed
    out = claims_for_point(GridPoint(Family.s3n(2), 3.0, 0.95))
    by_id = {c.claim_id: c for c in out}
    assert by_id["s3n-1:large-r0-exits-wall"].evidence["exit"] == "GammaWall"
    assert all(c.passed for c in out)


def test_every_claim_has_an_anchor():
    for c in run_claim_suite(default_grid(ns=(2,)), oracle=False):
        assert c.anchor == CLAIM_ANCHORS[c.claim_id]


def test_small_suite_passes_and_is_byte_stable():
    grid = default_grid(ns=(3,), lams=(1.0, 3.0))
    a = report_json(run_claim_suite(grid))
    b = report_json(run_claim_suite(grid))
    assert a == b
    doc = json.loads(a)
    assert doc["failed"] == 0 and doc["total"] > 0
    assert all("anchor" in v for v in doc["claims"].values())


def test_grid_layout():
    grid = default_grid()
    assert len(grid) == 2 * 3 * 6 * 3
    s3 = [g for g in grid if not g.family.is_s2n and g.r0 > 0.5]
    assert all(abs(g.r0 - g.family.r0_max) <= 0.02 for g in s3)
    assert np.isclose(sorted({g.lam for g in grid})[2], 4 / math.pi + 0.1)

from __future__ import annotations

import math

import numpy as np
import pytest

from cmcshoot import dynamics as dyn
from cmcshoot.errors import InvalidParameters
from cmcshoot.geometry import Family
from cmcshoot.oracle import OracleConfig, _run, oracle_integrate, oracle_shot
from cmcshoot.shooting import shoot


def test_config_limits():
    with pytest.raises(InvalidParameters):
        OracleConfig(step=1e-4)
    with pytest.raises(InvalidParameters):
        OracleConfig(method="euler")


@pytest.mark.parametrize("n,lam", [(2, 1.0), (2, 3.0), (3, 1.0), (3, 3.0)])
def test_constant_solution_drift(n, lam):
    p = dyn.Params(Family.s2n(n), lam)
    r = math.atan((2 * n - 1) / lam)
    out = oracle_integrate(p, (r, math.pi / 4, math.pi / 2), 1.0, OracleConfig(step=1e-6))
    assert out.s_end == pytest.approx(1.0)
    assert np.max(np.abs(out.y[:, 0] - r)) <= 1e-10
    assert np.max(np.abs(out.y[:, 2] - math.pi / 2)) <= 1e-10


def test_step_halving_ratio_is_about_sixteen():
    p = dyn.Params(Family.s2n(2), 1.0)
    st0 = (0.8, 0.7, -1.0)
    ref = oracle_integrate(p, st0, 0.3, OracleConfig(step=1e-6)).y_end
    errs = []
    for h in (0.03, 0.015):
        # bigger steps than oracle duty allows, so drive the compiled kernel directly
        _, _, _, _, y = _run(0, 2, 1.0, np.array(st0), h, 0.3, 0, 1000, 10)
        errs.append(np.max(np.abs(y - ref)))
    assert 12.0 < errs[0] / errs[1] < 20.0


def test_oracle_agrees_with_adaptive_on_random_shots():
    rng = np.random.default_rng(21)
    for _ in range(10):
        fam = Family.s2n(int(rng.integers(2, 5))) if rng.random() < 0.5 else Family.s3n(int(rng.integers(2, 5)))
        p = dyn.Params(fam, float(rng.uniform(0.5, 5.0)))
        r0 = float(rng.uniform(0.02, fam.r0_max - 0.02))
        shot = shoot(p, r0)
        ref = oracle_shot(p, r0, OracleConfig(step=1e-6))
        mask = ref.s <= min(ref.s_end, shot.s_star)
        gap = np.max(np.abs(shot.trajectory(ref.s[mask]) - ref.y[mask]))
        assert gap <= 1e-8


def test_hermite_interpolation_reproduces_samples():
    p = dyn.Params(Family.s2n(2), 1.0)
    out = oracle_shot(p, 0.9)
    np.testing.assert_allclose(out(out.s[:5]), out.y[:5], atol=1e-15)
    assert out.event in {"alpha", "rwall"}

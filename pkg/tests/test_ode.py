from __future__ import annotations

import math

import numpy as np
import pytest

from cmcshoot import dynamics as dyn
from cmcshoot.dynamics import Event
from cmcshoot.errors import InvalidParameters, SingularCoordinateError, StepUnderflow
from cmcshoot.geometry import Family
from cmcshoot.ode import IntegratorConfig, dopri_step, integrate_until_event
from cmcshoot.oracle import OracleConfig, oracle_shot


def harmonic(s, y):
    return (y[1], -y[0])


def exact(s):
    return np.array([math.cos(s), -math.sin(s)])


def _fixed_step_error(h, s_end=1.0):
    y = np.array([1.0, 0.0])
    s = 0.0
    k1 = np.asarray(harmonic(s, y))
    for _ in range(round(s_end / h)):
        y, k1, _, _ = dopri_step(harmonic, s, y, k1, h)
        s += h
    return np.max(np.abs(y - exact(s_end)))


def test_observed_order_at_least_four():
    errs = [_fixed_step_error(h) for h in (0.1, 0.05, 0.025)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 4.0


def test_dense_output_accuracy():
    out = integrate_until_event(harmonic, (1.0, 0.0), [], IntegratorConfig(), s_max=3.0)
    ss = np.linspace(0, 3.0, 301)
    err = np.max(np.abs(out.trajectory(ss) - np.array([exact(s) for s in ss])))
    assert err < 1e-9
    assert out.status == "s_max"
    assert np.all(np.diff(out.trajectory.s) > 0) and out.trajectory.s[0] == 0.0


def test_event_localization():
    ev = Event("cross", lambda y: -y[0])  # cos s falls through zero at pi/2
    out = integrate_until_event(harmonic, (1.0, 0.0), [ev])
    assert out.status == "event"
    assert out.hit.event == "cross"
    assert abs(out.hit.s_hit - math.pi / 2) <= 1e-10
    assert abs(out.hit.state_hit[0]) <= 1e-10


def test_earliest_event_first_and_ties_reported():
    a = Event("late", lambda y: -y[0] - 0.5)
    b = Event("early", lambda y: -y[0] + 0.5)
    out = integrate_until_event(harmonic, (1.0, 0.0), [a, b])
    assert [h.event for h in out.hits] == ["early"]
    assert out.hit.s_hit == pytest.approx(math.acos(0.5), abs=1e-10)
    twin = Event("twin", lambda y: -y[0] + 0.5)
    out = integrate_until_event(harmonic, (1.0, 0.0), [b, twin])
    assert sorted(h.event for h in out.hits) == ["early", "twin"]


def test_event_matches_oracle_on_wall_exit():
    p = dyn.Params(Family.s2n(2), 1.0)
    out = integrate_until_event(dyn.vector_field(p), dyn.start_state(1.55),
                                dyn.events(dyn.DomainBox.B))
    assert out.hit.event == dyn.R_WALL
    assert abs(out.hit.state_hit[0] - math.pi / 2) <= 1e-10
    ref = oracle_shot(p, 1.55, OracleConfig(step=1e-6))
    assert ref.event == "rwall"
    assert abs(out.hit.s_hit - ref.s_end) <= 1e-8


def test_determinism():
    p = dyn.Params(Family.s3n(2), 1.0)
    runs = [integrate_until_event(dyn.vector_field(p), dyn.start_state(0.7),
                                  dyn.events(dyn.DomainBox.BHat)) for _ in range(2)]
    assert np.array_equal(runs[0].trajectory.y, runs[1].trajectory.y)
    assert runs[0].hit.s_hit == runs[1].hit.s_hit


def test_tolerance_monotonicity_against_oracle():
    p = dyn.Params(Family.s2n(2), 1.0)
    ref = oracle_shot(p, 0.8, OracleConfig(step=1e-6))
    errs = []
    for rtol in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2)
        out = integrate_until_event(dyn.vector_field(p), dyn.start_state(0.8),
                                    dyn.events(dyn.DomainBox.B), cfg)
        mask = ref.s <= out.hit.s_hit
        errs.append(np.max(np.abs(out.trajectory(ref.s[mask]) - ref.y[mask])))
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_budget_and_errors():
    out = integrate_until_event(harmonic, (1.0, 0.0), [Event("never", lambda y: -2.0)],
                                IntegratorConfig(max_steps=5))
    assert out.status == "budget" and out.hit is None
    with pytest.raises(InvalidParameters):
        integrate_until_event(harmonic, (1.0, 0.0), [])
    with pytest.raises(InvalidParameters):
        IntegratorConfig(h_min=1.0, h_init=0.1)
    with pytest.raises(SingularCoordinateError), np.errstate(divide="ignore"):
        integrate_until_event(lambda s, y: (1.0 / y[0],), (0.0,), [], s_max=1.0)
    with pytest.raises((StepUnderflow, SingularCoordinateError)):
        integrate_until_event(lambda s, y: (1.0 / (1.0 - s) ** 2,), (0.0,), [],
                              IntegratorConfig(h_min=1e-10), s_max=2.0)


def test_constant_solution_with_adaptive_engine():
    p = dyn.Params(Family.s2n(2), 3.0)
    out = integrate_until_event(dyn.vector_field(p), (math.pi / 4, math.pi / 4, math.pi / 2),
                                [], s_max=1.0)
    y = out.trajectory.y
    assert np.max(np.abs(y[:, 0] - math.pi / 4)) <= 1e-9
    assert np.max(np.abs(y[:, 2] - math.pi / 2)) <= 1e-9

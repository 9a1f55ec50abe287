from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmcshoot import dynamics as dyn
from cmcshoot.errors import DomainError, InvalidParameters, SingularCoordinateError
from cmcshoot.geometry import ARCTAN_SQRT2, Family, mean_curvature
from cmcshoot.ode import integrate_until_event

S2 = Family.s2n(2)
S3 = Family.s3n(2)


def test_params_validation():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(InvalidParameters):
            dyn.Params(S2, bad)


def test_rhs_examples():
    p = dyn.Params(S2, 1.0)
    d = dyn.rhs(p, (math.pi / 4, math.pi / 4, -math.pi / 2))
    assert d == pytest.approx((0.0, -math.sqrt(2), 4.0), abs=1e-14)
    q = dyn.Params(S3, 1.0)
    d = dyn.rhs(q, (math.pi / 4, math.pi / 4, -math.pi / 2))
    assert d == pytest.approx((0.0, -math.sqrt(2), 3.0), abs=1e-14)


def test_constant_solution_is_stationary_in_r_and_alpha():
    p = dyn.Params(S2, 3.0)
    for th in (0.3, math.pi / 4, 1.2):
        d = dyn.rhs(p, (math.pi / 4, th, math.pi / 2))
        assert d[0] == pytest.approx(0.0, abs=1e-15)
        assert d[1] == pytest.approx(math.sqrt(2))
        assert d[2] == pytest.approx(0.0, abs=1e-14)


def test_rhs_singularities():
    p = dyn.Params(S2, 1.0)
    with pytest.raises(SingularCoordinateError):
        dyn.rhs(p, (0.0, 0.5, -0.2))
    with pytest.raises(SingularCoordinateError):
        dyn.rhs(p, (1.0, 0.0, -0.2))
    # sin(2 theta) = 0 is harmless when cos(alpha) vanishes too
    dyn.rhs(p, (1.0, 0.0, -math.pi / 2))
    with pytest.raises(SingularCoordinateError):
        dyn.rhs(dyn.Params(S3, 1.0), (math.pi / 2, 0.5, -0.2))


@settings(max_examples=300, deadline=None)
@given(r=st.floats(1e-3, math.pi / 2 - 1e-9), th=st.floats(1e-3, math.pi / 4),
       a=st.floats(-math.pi / 2, -1e-9), lam=st.floats(1e-3, 50), n=st.integers(2, 6),
       s2n=st.booleans())
def test_sign_structure_inside_the_box(r, th, a, lam, n, s2n):
    fam = Family.s2n(n) if s2n else Family.s3n(n)
    if not s2n and (r > ARCTAN_SQRT2 or math.tan(r) * math.cos(th) > 1.0):
        return
    d = dyn.rhs(dyn.Params(fam, lam), (r, th, a))
    assert d[0] >= 0.0
    assert d[1] <= 0.0
    assert d[2] > 0.0


def test_sign_structure_random_sample():
    rng = np.random.default_rng(11)
    for fam in (S2, S3):
        box = dyn.DomainBox.for_family(fam)
        count = 0
        while count < 10_000:
            st_ = (rng.uniform(1e-3, fam.r0_max), rng.uniform(1e-3, math.pi / 4),
                   rng.uniform(-math.pi / 2, 0.0))
            if not box.contains(st_):
                continue
            d = dyn.rhs(dyn.Params(fam, rng.uniform(0.01, 10.0)), st_)
            assert d[0] >= 0.0 and d[1] <= 0.0 and d[2] > 0.0
            count += 1


def test_on_shell_identity_both_families():
    rng = np.random.default_rng(3)
    for fam in (Family.s2n(3), Family.s3n(3)):
        p = dyn.Params(fam, 2.5)
        for _ in range(500):
            st_ = (rng.uniform(0.05, 1.5), rng.uniform(0.05, 1.5), rng.uniform(-3, 3))
            assert mean_curvature(fam, st_, dyn.rhs_alpha(p, st_)) == pytest.approx(2.5, abs=1e-10)


# -- transformed coordinates --------------------------------------------------------


def test_to_phase_examples():
    assert dyn.to_phase((math.pi / 4, math.pi / 4, -math.pi / 2)) == pytest.approx((1, 0, 0), abs=1e-15)
    assert dyn.to_phase((math.pi / 3, math.pi / 8, -math.pi / 4)) == pytest.approx(
        (math.sqrt(3), 1, 1), abs=1e-14
    )


def test_to_phase_singular():
    with pytest.raises(SingularCoordinateError):
        dyn.to_phase((1.0, 0.5, 0.0))
    with pytest.raises(SingularCoordinateError):
        dyn.to_phase((math.pi / 2, 0.5, -0.3))


def test_phase_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(100):
        st_ = (rng.uniform(0.01, math.pi / 2 - 0.01), rng.uniform(0.01, math.pi / 4),
               rng.uniform(-math.pi / 2 + 0.01, -0.01))
        back = dyn.from_phase(dyn.to_phase(st_))
        assert back == pytest.approx(st_, abs=1e-12)


def test_rhs_phase_examples():
    p = dyn.Params(S2, 1.0)
    # direct substitution gives dz/ds = 1 * (0 + 3 * 1 / 1 + 1) = 4
    assert dyn.rhs_phase(p, (1.0, 0.0, 0.0)) == pytest.approx((0.0, 2 * math.sqrt(2), 4.0))
    assert dyn.rhs_phase(p, (1.0, 0.0, 1.0))[0] == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainError):
        dyn.rhs_phase(p, (0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        dyn.rhs_phase(dyn.Params(S3, 1.0), (1.0, 0.0, 0.0))


def test_rhs_phase_matches_pushforward():
    rng = np.random.default_rng(9)
    for n, lam in [(2, 1.0), (3, 2.0), (4, 0.7)]:
        p = dyn.Params(Family.s2n(n), lam)
        for _ in range(100):
            st_ = np.array([rng.uniform(0.1, 1.4), rng.uniform(0.1, 0.75), rng.uniform(-1.4, -0.1)])
            d = np.array(dyn.rhs(p, st_))
            # fourth-order central difference of the chart map along rhs
            eps = 1e-4 / np.linalg.norm(d)
            f = lambda t: np.array(dyn.to_phase(st_ + t * d))  # noqa: E731
            push = (8 * (f(eps) - f(-eps)) - (f(2 * eps) - f(-2 * eps))) / (12 * eps)
            expect = np.array(dyn.rhs_phase(p, dyn.to_phase(st_)))
            err = np.abs(push - expect) / np.maximum(1.0, np.abs(expect))
            assert np.max(err) <= 1e-9


def test_phase_trajectory_agrees_with_original():
    p = dyn.Params(S2, 1.0)
    st0 = (0.6, 0.7, -1.2)
    s_end = 0.2
    a = integrate_until_event(dyn.vector_field(p), st0, [], s_max=s_end).trajectory
    b = integrate_until_event(lambda s, y: dyn.rhs_phase(p, y), dyn.to_phase(st0), [],
                              s_max=s_end).trajectory
    ss = np.linspace(0, s_end, 41)
    pa = np.array([dyn.to_phase(y) for y in a(ss)])
    np.testing.assert_allclose(pa, b(ss), atol=1e-7, rtol=0)


# -- box, events, symmetries -----------------------------------------------------------


def test_box_membership():
    assert dyn.DomainBox.B.contains((1.0, 0.5, -0.5))
    assert not dyn.DomainBox.B.contains((1.0, 0.9, -0.5))
    assert dyn.DomainBox.BHat.contains((0.7, 0.5, -0.5))
    assert not dyn.DomainBox.BHat.contains((0.95, 0.2, -0.5))  # beyond the mirror


def test_event_examples():
    assert dyn.e_gamma((ARCTAN_SQRT2, math.pi / 4, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert dyn.e_rwall((math.pi / 2, 0.123, -1.0)) == 0.0
    names = [e.name for e in dyn.events(dyn.DomainBox.B)]
    assert names == [dyn.ALPHA_ZERO, dyn.R_WALL, dyn.THETA_GUARD]
    names = [e.name for e in dyn.events(dyn.DomainBox.BHat)]
    assert names == [dyn.ALPHA_ZERO, dyn.GAMMA_WALL, dyn.THETA_GUARD]
    # every event is negative inside the box
    for e in dyn.events(dyn.DomainBox.BHat):
        assert e((0.5, 0.6, -0.4)) < 0


def test_symmetry_examples():
    out = dyn.symmetry(dyn.SymmetryMap.ReflectTheta, (0.6, 0.3, -1.0))
    assert out == pytest.approx((0.6, math.pi / 2 - 0.3, math.pi + 1.0))
    rng = np.random.default_rng(1)
    for _ in range(50):
        st_ = tuple(rng.uniform(-2, 2, 3))
        for kind in (dyn.SymmetryMap.ReflectR, dyn.SymmetryMap.ReflectTheta):
            assert dyn.symmetry(kind, dyn.symmetry(kind, st_)) == pytest.approx(st_, abs=1e-14)
        twice = dyn.symmetry(dyn.SymmetryMap.Reverse, dyn.symmetry(dyn.SymmetryMap.Reverse, st_))
        assert twice[2] - st_[2] == pytest.approx(2 * math.pi)


def test_reflected_arcs_still_solve_the_system():
    # H is preserved pointwise when the reversed image also reverses the tangent
    p = dyn.Params(S2, 1.3)
    rng = np.random.default_rng(4)
    for _ in range(50):
        st_ = (rng.uniform(0.2, 1.4), rng.uniform(0.1, 0.7), rng.uniform(-1.5, 0.0))
        for kind in dyn.SymmetryMap:
            img = dyn.symmetry(kind, st_)
            if kind is dyn.SymmetryMap.Reverse:
                continue
            # the image, read backwards, has dalpha/ds equal to the original's
            ap = dyn.rhs_alpha(p, st_)
            assert mean_curvature(S2, img, ap) == pytest.approx(1.3, abs=1e-10)


def test_reflect_xz_examples():
    on_mirror = (ARCTAN_SQRT2, math.pi / 4, -0.3)
    img = dyn.reflect_curve_xz([on_mirror])[0]
    assert img[:2] == pytest.approx(on_mirror[:2], abs=1e-12)
    img = dyn.apply_ambient(dyn.MIRRORS["xz"], (math.pi / 2, math.pi / 4, 0.0))
    assert img[:2] == pytest.approx((math.pi / 4, math.pi / 2), abs=1e-12)
    rng = np.random.default_rng(2)
    pts = [(rng.uniform(0.1, 1.4), rng.uniform(0.1, 1.4), rng.uniform(-3, 3)) for _ in range(100)]
    twice = dyn.reflect_curve_xz(dyn.reflect_curve_xz(pts))
    for a, b in zip(pts, twice):
        assert b[0] == pytest.approx(a[0], abs=1e-12)
        assert b[1] == pytest.approx(a[1], abs=1e-12)
        assert math.remainder(b[2] - a[2], 2 * math.pi) == pytest.approx(0.0, abs=1e-12)

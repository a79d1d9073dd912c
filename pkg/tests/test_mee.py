"""Element-set conversions: round trips, cross-validation, singular cases."""

import math

import numpy as np
import pytest

from moongate.errors import SingularStateError
from moongate.mee import (
    ClassicalElements,
    MeeState,
    cartesian_to_coe,
    cartesian_to_mee,
    coe_to_cartesian,
    coe_to_mee,
    mee_to_cartesian,
    mee_to_coe,
    wrap_angle,
)

from conftest import random_elements


def test_wrap_angle_half_open():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3.0 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.3 - 8.0 * math.pi) == pytest.approx(0.3, abs=1e-12)


def test_gateway_like_elements_round_trip():
    coe = ClassicalElements(
        a=3.916e4,
        e=0.923,
        i_rad=math.radians(98.53),
        raan_rad=math.radians(-60.75),
        argp_rad=math.radians(84.05),
        ta_rad=math.radians(168.22),
    )
    back = mee_to_coe(coe_to_mee(coe))
    assert back.a == pytest.approx(coe.a, rel=1e-13)
    assert back.e == pytest.approx(coe.e, rel=1e-13)
    assert back.i_rad == pytest.approx(coe.i_rad, rel=1e-13)
    assert back.raan_rad == pytest.approx(coe.raan_rad, rel=1e-13)
    assert back.argp_rad == pytest.approx(coe.argp_rad, rel=1e-13)
    assert back.ta_rad == pytest.approx(coe.ta_rad, rel=1e-13)


def test_random_round_trips_coe_mee(rng):
    for _ in range(1000):
        coe = random_elements(rng)
        mee = coe_to_mee(coe)
        back = coe_to_mee(mee_to_coe(mee))
        np.testing.assert_allclose(
            back.as_array()[:5], mee.as_array()[:5], rtol=1e-11, atol=1e-11
        )
        assert wrap_angle(back.q - mee.q) == pytest.approx(0.0, abs=1e-11)


def test_random_round_trips_mee_cartesian(rng):
    mu = 1.0
    for _ in range(1000):
        mee = coe_to_mee(random_elements(rng))
        r, v = mee_to_cartesian(mee, mu)
        back = cartesian_to_mee(r, v, mu)
        np.testing.assert_allclose(
            back.as_array()[:5], mee.as_array()[:5], rtol=1e-11, atol=1e-11
        )
        assert wrap_angle(back.q - mee.q) == pytest.approx(0.0, abs=1e-11)


def test_direct_cartesian_matches_perifocal_route(rng):
    # Two independent construction paths must agree away from singular sets.
    mu = 4902.8
    for _ in range(300):
        coe = random_elements(rng)
        scaled = ClassicalElements(
            a=coe.a * 1737.4,
            e=coe.e,
            i_rad=coe.i_rad,
            raan_rad=coe.raan_rad,
            argp_rad=coe.argp_rad,
            ta_rad=coe.ta_rad,
        )
        r_direct, v_direct = mee_to_cartesian(coe_to_mee(scaled), mu)
        r_pf, v_pf = coe_to_cartesian(scaled, mu)
        np.testing.assert_allclose(r_direct, r_pf, rtol=1e-10, atol=1e-8)
        np.testing.assert_allclose(v_direct, v_pf, rtol=1e-10, atol=1e-12)


def test_canonical_circular_equatorial_state():
    mee = MeeState(p=1.0, l=0.0, m=0.0, n=0.0, s=0.0, q=0.0)
    r, v = mee_to_cartesian(mee, 1.0)
    np.testing.assert_allclose(r, [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(v, [0.0, 1.0, 0.0], atol=1e-15)


def test_polar_circular_orbit_inclination_vector():
    coe = ClassicalElements(
        a=1.0575,
        e=0.0,
        i_rad=math.radians(90.0),
        raan_rad=0.7,
        argp_rad=0.0,
        ta_rad=0.2,
    )
    mee = coe_to_mee(coe)
    assert mee.l == pytest.approx(0.0, abs=1e-16)
    assert mee.m == pytest.approx(0.0, abs=1e-16)
    assert mee.n**2 + mee.s**2 == pytest.approx(1.0, rel=1e-14)


def test_unwrapped_longitude_same_geometry():
    mee = coe_to_mee(
        ClassicalElements(1.3, 0.2, 0.9, 0.4, -1.1, 2.2)
    )
    shifted = MeeState(mee.p, mee.l, mee.m, mee.n, mee.s, mee.q + 6.0 * math.pi)
    r0, v0 = mee_to_cartesian(mee, 1.0)
    r1, v1 = mee_to_cartesian(shifted, 1.0)
    np.testing.assert_allclose(r0, r1, atol=1e-12)
    np.testing.assert_allclose(v0, v1, atol=1e-12)


def test_momentum_consistency(rng):
    mu = 1.0
    for _ in range(100):
        mee = coe_to_mee(random_elements(rng))
        r, v = mee_to_cartesian(mee, mu)
        h = np.linalg.norm(np.cross(r, v))
        assert h * h / mu == pytest.approx(mee.p, rel=1e-12)


def test_retrograde_equatorial_rejected():
    r = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, -1.0, 0.0])
    with pytest.raises(SingularStateError):
        cartesian_to_mee(r, v, 1.0)
    with pytest.raises(SingularStateError):
        coe_to_mee(ClassicalElements(1.0, 0.0, math.pi - 1e-18, 0.0, 0.0, 0.0))


def test_rectilinear_rejected():
    with pytest.raises(SingularStateError):
        cartesian_to_mee(np.array([1.0, 0.0, 0.0]), np.array([0.1, 0.0, 0.0]), 1.0)


def test_open_branch_rejected():
    hyperbolic = MeeState(p=2.0, l=1.5, m=0.0, n=0.0, s=0.0, q=math.pi)
    with pytest.raises(SingularStateError):
        mee_to_cartesian(hyperbolic, 1.0)


def test_invalid_element_values_rejected():
    with pytest.raises(ValueError):
        MeeState(p=-1.0, l=0.0, m=0.0, n=0.0, s=0.0, q=0.0)
    with pytest.raises(ValueError):
        ClassicalElements(1.0, 1.2, 0.3, 0.0, 0.0, 0.0)  # p <= 0 for a > 0
    with pytest.raises(ValueError):
        ClassicalElements(1.0, -0.1, 0.3, 0.0, 0.0, 0.0)


def test_classical_from_cartesian_matches_construction(rng):
    mu = 398600.436
    for _ in range(200):
        coe = random_elements(rng, e_max=0.8)
        scaled = ClassicalElements(
            coe.a * 7000.0, coe.e, coe.i_rad, coe.raan_rad, coe.argp_rad, coe.ta_rad
        )
        if scaled.e < 1e-3 or scaled.i_rad < 1e-3:
            continue  # angles undefined near the circular or equatorial limit
        r, v = coe_to_cartesian(scaled, mu)
        back = cartesian_to_coe(r, v, mu)
        assert back.a == pytest.approx(scaled.a, rel=1e-10)
        assert back.e == pytest.approx(scaled.e, rel=1e-9, abs=1e-10)
        assert back.i_rad == pytest.approx(scaled.i_rad, rel=1e-10, abs=1e-11)
        assert wrap_angle(back.raan_rad - scaled.raan_rad) == pytest.approx(
            0.0, abs=1e-9
        )
        assert wrap_angle(back.argp_rad - scaled.argp_rad) == pytest.approx(
            0.0, abs=2e-8
        )
        assert wrap_angle(back.ta_rad - scaled.ta_rad) == pytest.approx(0.0, abs=2e-8)

"""Ephemeris sources: Kepler orbits, state tables, provider composition."""

import math

import numpy as np
import pytest

from moongate.constants import MU_EARTH_KM3_S2, MU_MOON_KM3_S2
from moongate.ephemeris import (
    TABLE_HEADER,
    Ephemeris,
    KeplerOrbit,
    StateTable,
    analytic_ephemeris,
    solve_kepler,
)
from moongate.epochs import utc_to_seconds_past_j2000
from moongate.errors import EphemerisRangeError, TableFormatError
from moongate.frames import BodyId, FrameTag, eci_to_mci_matrix


def test_solve_kepler_residual(rng):
    for _ in range(500):
        e = float(rng.uniform(0.0, 0.95))
        m = float(rng.uniform(-20.0, 20.0))
        ecc = solve_kepler(m, e)
        assert ecc - e * math.sin(ecc) == pytest.approx(
            math.remainder(m, 2.0 * math.pi), abs=1e-13
        )


def test_kepler_orbit_velocity_is_position_derivative(rng):
    orbit = KeplerOrbit.from_mean_elements(
        MU_EARTH_KM3_S2 + MU_MOON_KM3_S2,
        {
            "a_km": 384400.0,
            "e": 0.0554,
            "i_deg": 5.15,
            "raan_deg": 125.0,
            "raan_rate_deg_day": -0.05295,
            "peri_lon_deg": 83.35,
            "peri_lon_rate_deg_day": 0.1114,
            "mean_anomaly_deg": 134.96,
        },
    )
    for _ in range(20):
        t = float(rng.uniform(0.0, 3.0e7))
        h = 8.0
        r_plus, _ = orbit.state_ecliptic(t + h)
        r_minus, _ = orbit.state_ecliptic(t - h)
        _, v = orbit.state_ecliptic(t)
        fd = (r_plus - r_minus) / (2.0 * h)
        np.testing.assert_allclose(fd, v, rtol=2e-7, atol=2e-7)


def test_analytic_moon_distance_stays_in_monthly_band():
    eph = analytic_ephemeris()
    t0 = utc_to_seconds_past_j2000("2025-05-01T00:00:00")
    for hours in range(0, 30 * 24, 3):
        state = eph.body_state(
            BodyId.MOON, t0 + hours * 3600.0, BodyId.EARTH, FrameTag.ECI
        )
        dist = np.linalg.norm(state.r_km)
        assert 356000.0 < dist < 407000.0


def test_sun_distance_about_one_au():
    eph = analytic_ephemeris()
    t = utc_to_seconds_past_j2000("2025-01-03T00:00:00")  # near perihelion
    r = eph.body_state(BodyId.SUN, t, BodyId.EARTH, FrameTag.ECI).r_km
    assert np.linalg.norm(r) == pytest.approx(1.471e8, rel=2e-3)
    t = utc_to_seconds_past_j2000("2025-07-04T00:00:00")  # near aphelion
    r = eph.body_state(BodyId.SUN, t, BodyId.EARTH, FrameTag.ECI).r_km
    assert np.linalg.norm(r) == pytest.approx(1.521e8, rel=2e-3)


def test_body_state_frame_consistency():
    eph = analytic_ephemeris()
    t = utc_to_seconds_past_j2000("2025-05-25T00:00:00")
    tilt = eci_to_mci_matrix()
    moon_eci = eph.body_state(BodyId.MOON, t, BodyId.EARTH, FrameTag.ECI)
    earth_mci = eph.body_state(BodyId.EARTH, t, BodyId.MOON, FrameTag.MCI)
    np.testing.assert_allclose(earth_mci.r_km, -(tilt @ moon_eci.r_km), atol=1e-9)
    sun_moon_mci = eph.body_state(BodyId.SUN, t, BodyId.MOON, FrameTag.MCI)
    sun_earth_eci = eph.body_state(BodyId.SUN, t, BodyId.EARTH, FrameTag.ECI)
    np.testing.assert_allclose(
        sun_moon_mci.r_km,
        tilt @ (sun_earth_eci.r_km - moon_eci.r_km),
        atol=1e-6,
    )


def test_body_state_deterministic():
    eph = analytic_ephemeris()
    t = utc_to_seconds_past_j2000("2025-05-25T00:00:00")
    a = eph.body_state(BodyId.MOON, t, BodyId.EARTH, FrameTag.ECI)
    b = eph.body_state(BodyId.MOON, t, BodyId.EARTH, FrameTag.ECI)
    assert np.array_equal(a.r_km, b.r_km) and np.array_equal(a.v_kms, b.v_kms)


def _sample_table() -> StateTable:
    # Circular canonical orbit sampled coarsely; Hermite must track it well.
    ts = np.linspace(0.0, 2.0 * math.pi, 25)
    pos = np.stack([np.cos(ts), np.sin(ts), np.zeros_like(ts)], axis=1)
    vel = np.stack([-np.sin(ts), np.cos(ts), np.zeros_like(ts)], axis=1)
    return StateTable(ts, pos, vel, FrameTag.MCI, BodyId.MOON)


def test_table_exact_at_nodes():
    table = _sample_table()
    for k in (0, 7, 24):
        r, v = table.state(float(table.epochs_s[k]))
        np.testing.assert_allclose(r, table.pos_km[k], atol=1e-15)
        np.testing.assert_allclose(v, table.vel_kms[k], atol=1e-15)


def test_table_interpolation_accuracy_and_smoothness():
    table = _sample_table()
    for t in np.linspace(0.05, 6.2, 173):
        r, v = table.state(float(t))
        np.testing.assert_allclose(
            r, [math.cos(t), math.sin(t), 0.0], atol=2e-5
        )
        # Velocity of a cubic Hermite converges one order slower than
        # position: h^3 against h^4 for the 0.26 rad node spacing here.
        np.testing.assert_allclose(
            v, [-math.sin(t), math.cos(t), 0.0], atol=4e-4
        )


def test_table_velocity_is_derivative_of_interpolant():
    table = _sample_table()
    h = 1e-5
    for t in (0.4, 2.9, 5.51):
        rp, _ = table.state(t + h)
        rm, _ = table.state(t - h)
        _, v = table.state(t)
        np.testing.assert_allclose((rp - rm) / (2.0 * h), v, atol=1e-8)


def test_table_rejects_out_of_span():
    table = _sample_table()
    with pytest.raises(EphemerisRangeError, match="outside table span"):
        table.state(-0.5)
    with pytest.raises(EphemerisRangeError):
        table.state(7.0)


def test_csv_round_trip():
    table = _sample_table()
    text = table.to_csv_text()
    back = StateTable.from_csv_text(text)
    assert back.frame is FrameTag.MCI
    assert back.center is BodyId.MOON
    np.testing.assert_allclose(back.epochs_s, table.epochs_s, atol=1e-3)
    np.testing.assert_allclose(back.pos_km, table.pos_km, rtol=1e-9)
    np.testing.assert_allclose(back.vel_kms, table.vel_kms, rtol=1e-12)


def test_csv_parse_errors_name_line():
    good = "# frame=MCI center=MOON\n" + TABLE_HEADER + "\n0,1,0,0,0,1,0\n1,0,1,0,-1,0,0\n"
    StateTable.from_csv_text(good)
    with pytest.raises(TableFormatError, match="line 2: header"):
        StateTable.from_csv_text("# frame=MCI center=MOON\nbad,header\n")
    with pytest.raises(TableFormatError, match="line 3"):
        StateTable.from_csv_text(
            "# frame=MCI center=MOON\n" + TABLE_HEADER + "\n0,1,0,0,0,1\n"
        )
    with pytest.raises(TableFormatError, match="line 4"):
        StateTable.from_csv_text(
            "# frame=MCI center=MOON\n"
            + TABLE_HEADER
            + "\n0,1,0,0,0,1,0\n1,zap,1,0,-1,0,0\n"
        )
    with pytest.raises(TableFormatError, match="frame"):
        StateTable.from_csv_text(TABLE_HEADER + "\n0,1,0,0,0,1,0\n1,0,1,0,-1,0,0\n")


def test_csv_rejects_non_monotonic():
    text = (
        "# frame=MCI center=MOON\n"
        + TABLE_HEADER
        + "\n1,1,0,0,0,1,0\n1,0,1,0,-1,0,0\n"
    )
    with pytest.raises(TableFormatError, match="increase strictly"):
        StateTable.from_csv_text(text)


def test_provider_rejects_wrong_table_tags():
    table = _sample_table()  # MCI / MOON
    with pytest.raises(TableFormatError, match="moon table"):
        Ephemeris(moon_table=table)


def test_gateway_query_without_table():
    eph = analytic_ephemeris()
    with pytest.raises(EphemerisRangeError, match="Gateway"):
        eph.body_state(BodyId.GATEWAY, 0.0, BodyId.MOON, FrameTag.MCI)


# ---------------------------------------------------------------------------
# Packaged data files


def test_bundled_tables_cover_search_horizon():
    from moongate.constants import (
        GATEWAY_WINDOW_UTC,
        LEO_TOF_WINDOW_DAYS,
    )
    from moongate.ephemeris import bundled_ephemeris

    eph = bundled_ephemeris()
    w0 = utc_to_seconds_past_j2000(GATEWAY_WINDOW_UTC[0])
    w1 = utc_to_seconds_past_j2000(GATEWAY_WINDOW_UTC[1])
    horizon = LEO_TOF_WINDOW_DAYS[1] * 86400.0
    assert eph.moon_table.epochs_s[0] <= w0 - horizon
    assert eph.moon_table.epochs_s[-1] >= w1 + horizon
    assert eph.gateway_table.epochs_s[0] <= w0
    assert eph.gateway_table.epochs_s[-1] >= w1


def test_bundled_moon_follows_model_field():
    # Differentiating the stored columns recovers the exact force field the
    # propagator integrates: velocities from positions, and the two-body +
    # solar-tide model from velocities. A missing tide would sit two orders
    # above the acceleration gate; wrong units or frame would be O(1).
    from moongate.dynamics import moon_model_accel
    from moongate.ephemeris import bundled_ephemeris

    eph = bundled_ephemeris()
    table = eph.moon_table
    h = table.epochs_s[1] - table.epochs_s[0]
    for k in range(1, len(table.epochs_s) - 1, 37):
        fd_v = (table.pos_km[k + 1] - table.pos_km[k - 1]) / (2.0 * h)
        assert np.max(np.abs(fd_v - table.vel_kms[k])) < 1e-4
        fd_a = (table.vel_kms[k + 1] - table.vel_kms[k - 1]) / (2.0 * h)
        sun = eph.body_state(
            BodyId.SUN, table.epochs_s[k], BodyId.EARTH, FrameTag.ECI
        ).r_km
        assert np.max(np.abs(fd_a - moon_model_accel(table.pos_km[k], sun))) < 1e-9


def test_bundled_gateway_follows_model_field():
    # Same differentiation oracle for the station orbit, away from perilune
    # where the 240 s sampling is too coarse for a clean second difference.
    from moongate.constants import MU_SUN_KM3_S2
    from moongate.dynamics import third_body_accel
    from moongate.ephemeris import bundled_ephemeris

    eph = bundled_ephemeris()
    table = eph.gateway_table
    h = table.epochs_s[1] - table.epochs_s[0]
    checked = 0
    for k in range(1, len(table.epochs_s) - 1, 11):
        r = table.pos_km[k]
        if np.linalg.norm(r) < 2.0e4:
            continue
        epoch = table.epochs_s[k]
        fd_a = (table.vel_kms[k + 1] - table.vel_kms[k - 1]) / (2.0 * h)
        earth = eph.body_state(BodyId.EARTH, epoch, BodyId.MOON, FrameTag.MCI).r_km
        sun = eph.body_state(BodyId.SUN, epoch, BodyId.MOON, FrameTag.MCI).r_km
        model = (
            -MU_MOON_KM3_S2 * r / np.linalg.norm(r) ** 3
            + third_body_accel(r, earth, MU_EARTH_KM3_S2)
            + third_body_accel(r, sun, MU_SUN_KM3_S2)
        )
        assert np.max(np.abs(fd_a - model)) / np.linalg.norm(model) < 1e-3
        checked += 1
    assert checked > 100


def test_bundled_gateway_matches_anchor_elements():
    from moongate.constants import GATEWAY_ANCHOR_UTC
    from moongate.datagen import gateway_anchor_state_mci
    from moongate.ephemeris import bundled_ephemeris, gateway_mee
    from moongate.frames import lunar_canonical
    from moongate.mee import cartesian_to_mee

    eph = bundled_ephemeris()
    scale = lunar_canonical()
    anchor = utc_to_seconds_past_j2000(GATEWAY_ANCHOR_UTC)
    got = gateway_mee(eph, anchor, scale.du_km, scale.vu_km_s).as_array()
    r0, v0 = gateway_anchor_state_mci()
    want = cartesian_to_mee(r0 / scale.du_km, v0 / scale.vu_km_s, 1.0).as_array()
    assert np.max(np.abs(got - want)) < 1e-9

"""Hand-off between the Moon-centered and Earth-centered descriptions.

The oracle strategy: state chaining is validated by exact round trips, the
transition Jacobian by independent directional differences and by the
inverse-map product, the costate chaining by the bilinear pairing it must
preserve, and the time-partial of the transform by an epoch-difference
quotient of the chained state.
"""

import numpy as np

from moongate import multiarc
from moongate.ephemeris import analytic_ephemeris
from moongate.frames import earth_canonical, lunar_canonical
from moongate.mee import cartesian_to_mee, wrap_angle

from conftest import ANCHOR_EPOCH_S

LUNAR = lunar_canonical()
EARTH = earth_canonical()


def _random_sphere_state(gen: np.random.Generator) -> np.ndarray:
    """Moon-centered canonical elements at sphere-crossing distances."""
    radius = gen.uniform(5.5e4, 9.5e4) / LUNAR.du_km
    u = gen.normal(size=3)
    u /= np.linalg.norm(u)
    t = gen.normal(size=3)
    t -= (t @ u) * u
    t /= np.linalg.norm(t)
    speed = np.sqrt(1.0 / radius) * gen.uniform(0.8, 1.3)
    return cartesian_to_mee(radius * u, speed * t, 1.0).as_array()


def _inverse_chain(z_earth: np.ndarray, epoch_s: float, eph) -> np.ndarray:
    rv_earth = multiarc.mee_to_cartesian_array(z_earth)
    rv_lunar = multiarc.earth_to_moon_cartesian(rv_earth, epoch_s, eph, LUNAR, EARTH)
    return multiarc.cartesian_to_mee_array(rv_lunar)


def _element_gap(za: np.ndarray, zb: np.ndarray) -> float:
    d = za - zb
    d[5] = wrap_angle(float(za[5]) - float(zb[5]))
    return float(np.max(np.abs(d)))


def test_cartesian_hand_off_round_trip(rng):
    eph = analytic_ephemeris()
    for _ in range(50):
        rv = np.concatenate([rng.uniform(-60.0, 60.0, 3), rng.uniform(-0.5, 0.5, 3)])
        epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
        rv_earth = multiarc.moon_to_earth_cartesian(rv, epoch, eph, LUNAR, EARTH)
        back = multiarc.earth_to_moon_cartesian(rv_earth, epoch, eph, LUNAR, EARTH)
        assert np.max(np.abs(back - rv)) < 1e-10


def test_element_chain_round_trip(rng):
    eph = analytic_ephemeris()
    for _ in range(50):
        z = _random_sphere_state(rng)
        epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
        z_earth = multiarc.chain_state(z, epoch, eph, LUNAR, EARTH)
        z_back = _inverse_chain(z_earth, epoch, eph)
        assert _element_gap(z_back, z) < 1e-10


def test_transition_jacobian_directional_derivative(rng):
    eph = analytic_ephemeris()
    for _ in range(8):
        z = _random_sphere_state(rng)
        epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
        jac = multiarc.transition_jacobian(z, epoch, eph, LUNAR, EARTH)
        for _ in range(4):
            dz = rng.normal(size=6)
            dz /= np.linalg.norm(dz)
            h = 3e-6
            zp = multiarc.chain_state(z + h * dz, epoch, eph, LUNAR, EARTH)
            zm = multiarc.chain_state(z - h * dz, epoch, eph, LUNAR, EARTH)
            diff = zp - zm
            diff[5] = wrap_angle(float(zp[5]) - float(zm[5]))
            directional = diff / (2.0 * h)
            err = np.linalg.norm(jac @ dz - directional)
            assert err < 1e-6 * max(1.0, np.linalg.norm(directional))


def test_jacobian_inverse_product_is_identity(rng):
    eph = analytic_ephemeris()
    for _ in range(20):
        z = _random_sphere_state(rng)
        epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
        jac = multiarc.transition_jacobian(z, epoch, eph, LUNAR, EARTH)
        z_earth = multiarc.chain_state(z, epoch, eph, LUNAR, EARTH)
        jac_back = multiarc._fd_jacobian(
            lambda ze: _inverse_chain(ze, epoch, eph), z_earth
        )
        # Differencing noise is amplified by the chain's condition number
        # (entries span four orders); 1e-6 still rules out any wrong
        # rotation, scaling, or ordering, all of which defect at O(1).
        defect = np.max(np.abs(jac_back @ jac - np.eye(6)))
        assert defect < 1e-6


def test_costate_chain_preserves_pairing(rng):
    eph = analytic_ephemeris()
    for _ in range(20):
        z = _random_sphere_state(rng)
        epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
        jac = multiarc.transition_jacobian(z, epoch, eph, LUNAR, EARTH)
        lam = rng.uniform(-1.0, 1.0, 6)
        lam_earth = multiarc.chain_costate(lam, jac)
        assert multiarc.pairing_defect(jac, lam, lam_earth, rng) < 1e-9
        lam_back = multiarc.chain_costate_inverse(lam_earth, jac)
        assert np.max(np.abs(lam_back - lam)) < 1e-10


def test_earth_distance_matches_geometry(rng):
    eph = analytic_ephemeris()
    for _ in range(20):
        z = _random_sphere_state(rng)
        epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
        dist = multiarc.earth_distance_km(z, epoch, eph, LUNAR)
        rv_earth = multiarc.moon_to_earth_cartesian(
            multiarc.mee_to_cartesian_array(z), epoch, eph, LUNAR, EARTH
        )
        assert abs(dist - np.linalg.norm(rv_earth[:3]) * EARTH.du_km) < 1e-6


def _epoch_difference_partial(z, epoch, eph, dt_s=16.0):
    def diff(h):
        zp = multiarc.chain_state(z, epoch + h, eph, LUNAR, EARTH)
        zm = multiarc.chain_state(z, epoch - h, eph, LUNAR, EARTH)
        d = zp - zm
        d[5] = wrap_angle(float(zp[5]) - float(zm[5]))
        return d / (2.0 * h)

    return (4.0 * diff(0.5 * dt_s) - diff(dt_s)) / 3.0


def test_transform_time_partial_matches_epoch_difference(rng, table_eph):
    # The quotient differentiates the ephemeris source; the closed form uses
    # the model field at the Moon. They differ by the source's acceleration
    # defect (solar tide for the mean-element Moon, interpolant curvature
    # jumps at table nodes), a few percent at worst, while any units,
    # rotation, or row-ordering mistake would be O(1).
    for eph in (analytic_ephemeris(), table_eph):
        for _ in range(6):
            z = _random_sphere_state(rng)
            epoch = ANCHOR_EPOCH_S + rng.uniform(-2.0, 2.0) * 86400.0
            closed = multiarc.transform_time_partial(z, epoch, eph, LUNAR, EARTH)
            quotient = _epoch_difference_partial(z, epoch, eph)
            scale = max(np.linalg.norm(quotient), 1e-12)
            assert np.linalg.norm(closed - quotient) < 0.1 * scale
            assert np.linalg.norm(closed) > 1e-7  # non-trivial rate


def test_transition_record_mismatch_definition():
    record = multiarc.TransitionRecord(
        epoch_s=0.0,
        z_before=np.zeros(6),
        z_after=np.zeros(6),
        lam_before=np.zeros(6),
        lam_after=np.zeros(6),
        jacobian=np.eye(6),
        radius_residual_km=0.0,
        hamiltonian_before_per_s=-2.0e-4,
        hamiltonian_after_per_s=-8.0e-4,
        translation_rate_per_s=-6.0e-4,
    )
    assert abs(record.hamiltonian_jump_per_s - (-6.0e-4)) < 1e-18
    assert record.hamiltonian_mismatch < 1e-12
    shifted = multiarc.TransitionRecord(
        epoch_s=0.0,
        z_before=np.zeros(6),
        z_after=np.zeros(6),
        lam_before=np.zeros(6),
        lam_after=np.zeros(6),
        jacobian=np.eye(6),
        radius_residual_km=0.0,
        hamiltonian_before_per_s=-2.0e-4,
        hamiltonian_after_per_s=-8.0e-4,
        translation_rate_per_s=-5.0e-4,
    )
    assert abs(shifted.hamiltonian_mismatch - (1.0e-4 / 8.0e-4)) < 1e-12


def test_table_and_analytic_sources_agree_on_chaining(rng, table_eph):
    # Same state chained through both ephemeris sources lands at slightly
    # different terrestrial elements (the sources disagree on the lunar
    # position at the few-hundred-km level) but the Jacobian products and
    # pairing stay consistent within each source.
    z = _random_sphere_state(rng)
    epoch = ANCHOR_EPOCH_S + 0.5 * 86400.0
    for eph in (analytic_ephemeris(), table_eph):
        jac = multiarc.transition_jacobian(z, epoch, eph, LUNAR, EARTH)
        lam = rng.uniform(-1.0, 1.0, 6)
        assert (
            multiarc.pairing_defect(jac, lam, multiarc.chain_costate(lam, jac), rng)
            < 1e-12
        )

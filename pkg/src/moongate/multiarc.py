"""Representation hand-off at the attractor switching sphere.

A transfer between the Gateway orbit and a low Earth orbit is integrated as
two arcs: Moon-centered elements inside the sphere where the Moon dominates,
Earth-centered elements outside. At the crossing the element vector is
rebuilt around the new center and the adjoints are mapped with the inverse
transpose of the transformation Jacobian, which preserves the variational
pairing lambda . dx exactly.

The hand-off map is time-dependent (its translation follows the Moon), so
the Hamiltonian value is not itself continuous: along one extremal

    H_after / TU_E  =  H_before / TU_M  +  s * lambda_after . dT/dt,

where dT/dt is the rate of the chart change at frozen Moon-centered
elements and s the propagation direction sign. The record therefore keeps
the raw values on both sides together with the translation-rate term, and
the continuity diagnostic is the residual of the identity above. With a
lunar ephemeris that obeys the arcs' force model the residual sits at the
finite-difference floor; the raw difference always contains the
translation-rate term, which is of the order of the adjoints times the
Moon's velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import moon_model_accel
from .ephemeris import Ephemeris
from .frames import BodyId, CanonicalScale, FrameTag, mci_to_eci_matrix
from .mee import MeeState, cartesian_to_mee, mee_to_cartesian, wrap_angle


def mee_to_cartesian_array(z: np.ndarray) -> np.ndarray:
    r, v = mee_to_cartesian(MeeState.from_array(z), 1.0)
    return np.concatenate([r, v])


def cartesian_to_mee_array(rv: np.ndarray) -> np.ndarray:
    return cartesian_to_mee(rv[:3], rv[3:], 1.0).as_array()


def _fd_jacobian(func, x: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian with per-component steps and one
    Richardson pass, so a larger step keeps roundoff down without paying
    second-order truncation.

    The sixth output component is an angle; its differences are wrapped so
    the Jacobian stays continuous across the branch cut.
    """
    n = len(x)
    f0 = func(x)
    jac = np.empty((len(f0), n))

    def column(i: int, h: float) -> np.ndarray:
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        fp = func(xp)
        fm = func(xm)
        diff = fp - fm
        if len(diff) == 6:
            diff[5] = wrap_angle(float(fp[5]) - float(fm[5]))
        return diff / (2.0 * h)

    for i in range(n):
        h = rel_step * max(1.0, abs(float(x[i])))
        jac[:, i] = (4.0 * column(i, h) - column(i, 2.0 * h)) / 3.0
    return jac


@dataclass(frozen=True)
class TransitionRecord:
    """What happened at the sphere crossing, for diagnostics and tests."""

    epoch_s: float
    z_before: np.ndarray
    z_after: np.ndarray
    lam_before: np.ndarray
    lam_after: np.ndarray
    jacobian: np.ndarray
    radius_residual_km: float
    hamiltonian_before_per_s: float
    hamiltonian_after_per_s: float
    translation_rate_per_s: float

    @property
    def hamiltonian_jump_per_s(self) -> float:
        """Raw value difference; equals the translation-rate term along a
        consistent extremal."""
        return self.hamiltonian_after_per_s - self.hamiltonian_before_per_s

    @property
    def hamiltonian_mismatch(self) -> float:
        """Relative residual of the junction continuity identity."""
        ref = max(
            abs(self.hamiltonian_before_per_s), abs(self.hamiltonian_after_per_s)
        )
        if ref == 0.0:
            return 0.0
        return abs(self.hamiltonian_jump_per_s - self.translation_rate_per_s) / ref


def moon_to_earth_cartesian(
    rv_canon_lunar: np.ndarray,
    epoch_s: float,
    eph: Ephemeris,
    lunar: CanonicalScale,
    earth: CanonicalScale,
) -> np.ndarray:
    """Lunar canonical MCI state to terrestrial canonical ECI state."""
    rot = mci_to_eci_matrix()
    r_km = rot @ (rv_canon_lunar[:3] * lunar.du_km)
    v_kms = rot @ (rv_canon_lunar[3:] * lunar.vu_km_s)
    moon = eph.body_state(BodyId.MOON, epoch_s, BodyId.EARTH, FrameTag.ECI)
    r_km = r_km + moon.r_km
    v_kms = v_kms + moon.v_kms
    return np.concatenate([r_km / earth.du_km, v_kms / earth.vu_km_s])


def earth_to_moon_cartesian(
    rv_canon_earth: np.ndarray,
    epoch_s: float,
    eph: Ephemeris,
    lunar: CanonicalScale,
    earth: CanonicalScale,
) -> np.ndarray:
    """Inverse of moon_to_earth_cartesian."""
    moon = eph.body_state(BodyId.MOON, epoch_s, BodyId.EARTH, FrameTag.ECI)
    r_km = rv_canon_earth[:3] * earth.du_km - moon.r_km
    v_kms = rv_canon_earth[3:] * earth.vu_km_s - moon.v_kms
    rot = mci_to_eci_matrix().T
    return np.concatenate(
        [(rot @ r_km) / lunar.du_km, (rot @ v_kms) / lunar.vu_km_s]
    )


def transition_jacobian(
    z_lunar: np.ndarray,
    epoch_s: float,
    eph: Ephemeris,
    lunar: CanonicalScale,
    earth: CanonicalScale,
) -> np.ndarray:
    """Derivative of the terrestrial elements with respect to the lunar ones.

    Built as a chain: elements-to-Cartesian by differencing, the frame and
    unit change exactly (the ephemeris translation has no state derivative),
    Cartesian-to-elements by differencing at the mapped point.
    """
    jac_a = _fd_jacobian(mee_to_cartesian_array, np.asarray(z_lunar, dtype=float))
    rot = mci_to_eci_matrix()
    mid = np.zeros((6, 6))
    mid[:3, :3] = rot * (lunar.du_km / earth.du_km)
    mid[3:, 3:] = rot * (lunar.vu_km_s / earth.vu_km_s)
    rv_lunar = mee_to_cartesian_array(np.asarray(z_lunar, dtype=float))
    rv_earth = moon_to_earth_cartesian(rv_lunar, epoch_s, eph, lunar, earth)
    jac_d = _fd_jacobian(cartesian_to_mee_array, rv_earth)
    return jac_d @ mid @ jac_a


def chain_state(
    z_lunar: np.ndarray,
    epoch_s: float,
    eph: Ephemeris,
    lunar: CanonicalScale,
    earth: CanonicalScale,
) -> np.ndarray:
    """Terrestrial canonical elements at the crossing."""
    rv_lunar = mee_to_cartesian_array(np.asarray(z_lunar, dtype=float))
    rv_earth = moon_to_earth_cartesian(rv_lunar, epoch_s, eph, lunar, earth)
    return cartesian_to_mee_array(rv_earth)


def transform_time_partial(
    z_lunar: np.ndarray,
    epoch_s: float,
    eph: Ephemeris,
    lunar: CanonicalScale,
    earth: CanonicalScale,
) -> np.ndarray:
    """Rate of the chart change at frozen Moon-centered elements [1/s].

    The moving-origin part of the transform drifts with the lunar ephemeris:
    the geocentric position rows at the stored lunar velocity, the velocity
    rows at the lunar acceleration. The acceleration is taken from the craft
    force model (moon_model_accel) rather than by differentiating the
    ephemeris twice, because the spacecraft equations on either side of the
    hand-off only ever sample the ephemeris position; the inter-chart rate
    defect they actually produce is the model field at the Moon. With that
    choice the junction energy identity closes to finite-difference accuracy
    for any ephemeris source.
    """
    z_lunar = np.asarray(z_lunar, dtype=float)
    rv_lunar = mee_to_cartesian_array(z_lunar)
    rv_earth = moon_to_earth_cartesian(rv_lunar, epoch_s, eph, lunar, earth)

    moon = eph.body_state(BodyId.MOON, epoch_s, center=BodyId.EARTH, frame=FrameTag.ECI)
    sun = eph.body_state(BodyId.SUN, epoch_s, center=BodyId.EARTH, frame=FrameTag.ECI)
    accel = moon_model_accel(moon.r_km, sun.r_km)
    rate = np.concatenate([moon.v_kms / earth.du_km, accel / earth.vu_km_s])

    jac_d = _fd_jacobian(cartesian_to_mee_array, rv_earth)
    return jac_d @ rate


def chain_costate(lam_lunar: np.ndarray, jacobian: np.ndarray) -> np.ndarray:
    """Adjoint hand-off preserving the pairing lambda . dx."""
    return np.linalg.solve(jacobian.T, np.asarray(lam_lunar, dtype=float))


def chain_costate_inverse(lam_earth: np.ndarray, jacobian: np.ndarray) -> np.ndarray:
    return jacobian.T @ np.asarray(lam_earth, dtype=float)


def earth_distance_km(
    z_lunar: np.ndarray,
    epoch_s: float,
    eph: Ephemeris,
    lunar: CanonicalScale,
) -> float:
    """Geocentric distance of a Moon-centered element state."""
    rv = mee_to_cartesian_array(np.asarray(z_lunar, dtype=float))
    rot = mci_to_eci_matrix()
    r_eci = rot @ (rv[:3] * lunar.du_km)
    moon = eph.body_state(BodyId.MOON, epoch_s, BodyId.EARTH, FrameTag.ECI)
    return float(np.linalg.norm(r_eci + moon.r_km))


def pairing_defect(
    jacobian: np.ndarray, lam_before: np.ndarray, lam_after: np.ndarray, rng
) -> float:
    """Worst relative violation of lambda_new . (J dz) = lambda_old . dz
    over random variations; zero up to roundoff for a consistent hand-off."""
    worst = 0.0
    for _ in range(32):
        dz = rng.uniform(-1.0, 1.0, 6)
        lhs = float(lam_after @ (jacobian @ dz))
        rhs = float(lam_before @ dz)
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst

"""Orbital dynamics in modified equinoctial elements.

Everything here works in canonical units of the active attractor: distances
in units of the body radius, times chosen so mu = 1. Perturbing and thrust
accelerations enter through their radial / transversal / out-of-plane (LVLH)
components.
"""

from __future__ import annotations

import math

import numpy as np

from .constants import MU_EARTH_KM3_S2, MU_MOON_KM3_S2, MU_SUN_KM3_S2
from .errors import PropellantExhaustedError, SingularStateError
from .frames import lvlh_basis
from .mee import MeeState, mee_to_cartesian


def gauss_matrix(z: np.ndarray) -> np.ndarray:
    """Element-rate coefficients of the LVLH acceleration components.

    Returns the 6x3 matrix mapping (a_r, a_t, a_h) to element rates; the
    last row carries the acceleration-dependent part of the true-longitude
    rate only.

    Raises:
        SingularStateError: if 1 + l cos q + m sin q is not positive.
    """
    p, l, m, n, s, q = z[:6]
    if p <= 0.0:
        raise SingularStateError(f"semilatus rectum must be positive, got {p}")
    cq = math.cos(q)
    sq = math.sin(q)
    eta = 1.0 + l * cq + m * sq
    if eta <= 0.0:
        raise SingularStateError(
            f"state on the open hyperbolic branch: eta = {eta}"
        )
    root_p = math.sqrt(p)
    lever = n * sq - s * cq
    chi = 1.0 + n * n + s * s
    g = np.empty((6, 3))
    g[0] = (0.0, 2.0 * p / eta, 0.0)
    g[1] = (sq, ((eta + 1.0) * cq + l) / eta, -m * lever / eta)
    g[2] = (-cq, ((eta + 1.0) * sq + m) / eta, l * lever / eta)
    g[3] = (0.0, 0.0, 0.5 * chi * cq / eta)
    g[4] = (0.0, 0.0, 0.5 * chi * sq / eta)
    g[5] = (0.0, 0.0, lever / eta)
    return root_p * g


def gauss_rates(z: np.ndarray, a_lvlh: np.ndarray) -> np.ndarray:
    """Time derivatives of the equinoctial elements under an acceleration.

    Args:
        z: element vector (p, l, m, n, s, q), canonical units.
        a_lvlh: acceleration components (radial, transversal, out-of-plane).

    Returns:
        Element rates, including the Keplerian advance of q.
    """
    p, l, m = z[0], z[1], z[2]
    cq = math.cos(z[5])
    sq = math.sin(z[5])
    eta = 1.0 + l * cq + m * sq
    rates = gauss_matrix(z) @ np.asarray(a_lvlh, dtype=float)
    rates[5] += math.sqrt(1.0 / p**3) * eta * eta
    return rates


def third_body_accel(
    r_craft: np.ndarray, r_body: np.ndarray, mu_body: float
) -> np.ndarray:
    """Differential attraction of a perturbing body.

    Both positions are relative to the central attractor. The difference of
    the direct and indirect terms is evaluated with the f(q) rewrite, which
    stays accurate when the craft sits deep inside the perturber's orbit:

        a = -mu3 / d^3 * (r + f(q) rho),   d = rho - r

    with f(q) = q (3 + 3q + q^2) / (1 + (1+q)^(3/2)) and
    q = r . (r - 2 rho) / |rho|^2.
    """
    r = np.asarray(r_craft, dtype=float)
    rho = np.asarray(r_body, dtype=float)
    rho2 = float(rho @ rho)
    if rho2 == 0.0:
        raise ValueError("perturbing body coincides with the center")
    q = float(r @ (r - 2.0 * rho)) / rho2
    one_q = 1.0 + q
    if one_q <= 0.0:
        raise ValueError("craft position reaches the perturbing body")
    fq = q * (3.0 + 3.0 * q + q * q) / (1.0 + one_q * math.sqrt(one_q))
    d = rho - r
    d3 = float(d @ d) ** 1.5
    if d3 == 0.0:
        raise ValueError("craft position reaches the perturbing body")
    return -mu_body / d3 * (r + fq * rho)


def third_body_accel_naive(
    r_craft: np.ndarray, r_body: np.ndarray, mu_body: float
) -> np.ndarray:
    """Textbook two-term form; cancellation-prone, kept as a cross-check."""
    r = np.asarray(r_craft, dtype=float)
    rho = np.asarray(r_body, dtype=float)
    d = rho - r
    return mu_body * (d / np.linalg.norm(d) ** 3 - rho / np.linalg.norm(rho) ** 3)


def moon_model_accel(r_moon_km: np.ndarray, r_sun_km: np.ndarray) -> np.ndarray:
    """Geocentric lunar acceleration implied by the craft force model (km/s^2).

    The spacecraft equations subtract the Earth-Moon two-body pull and add the
    solar differential term; collecting those contributions, the Moon itself
    must obey

        a = -(mu_E + mu_M) r / |r|^3 + tide(r, r_sun, mu_S)

    for the lunar and terrestrial descriptions of one trajectory to agree at
    the hand-off sphere. This is both the field used to generate the bundled
    lunar table and the rate entering the junction energy identity.
    """
    r = np.asarray(r_moon_km, dtype=float)
    mu_pair = MU_EARTH_KM3_S2 + MU_MOON_KM3_S2
    r3 = float(r @ r) ** 1.5
    return -mu_pair / r3 * r + third_body_accel(r, np.asarray(r_sun_km, dtype=float), MU_SUN_KM3_S2)


def thrust_direction_lvlh(alpha_rad: float, beta_rad: float) -> np.ndarray:
    """Unit LVLH thrust direction from in-plane and out-of-plane angles.

    alpha is measured in the orbit plane from the transversal axis toward
    the radial axis; beta elevates out of plane.
    """
    ca, sa = math.cos(alpha_rad), math.sin(alpha_rad)
    cb, sb = math.cos(beta_rad), math.sin(beta_rad)
    return np.array([sa * cb, ca * cb, sb])


def mass_ratio_at(
    tau_s: float,
    tau_fin_s: float,
    ut_max_km_s2: float,
    c_km_s: float,
    forward: bool,
) -> float:
    """Remaining mass fraction along a max-thrust arc, closed form.

    Forward legs burn from a full tank at tau = 0; backward legs arrive
    full at tau = tau_fin, so the fraction at swept time tau reflects the
    propellant still to be spent.

    Raises:
        PropellantExhaustedError: if the fraction is not positive.
    """
    burned_s = tau_s if forward else (tau_fin_s - tau_s)
    ratio = 1.0 - (ut_max_km_s2 / c_km_s) * burned_s
    if ratio <= 0.0:
        raise PropellantExhaustedError(
            f"mass ratio {ratio:.6f} at tau = {tau_s:.1f} s"
        )
    return ratio


def perturbing_accel_lvlh(
    z: np.ndarray,
    bodies: list[tuple[float, np.ndarray]],
) -> np.ndarray:
    """Summed third-body acceleration resolved on the craft's LVLH axes.

    Args:
        z: equinoctial state, canonical units.
        bodies: (mu, position) pairs of the perturbers, canonical units,
            positions relative to the central attractor in inertial axes.
    """
    r, v = mee_to_cartesian(MeeState.from_array(z), 1.0)
    total = np.zeros(3)
    for mu_body, r_body in bodies:
        total += third_body_accel(r, r_body, mu_body)
    return lvlh_basis(r, v) @ total

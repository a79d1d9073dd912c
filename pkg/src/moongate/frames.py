"""Reference frames, elementary rotations, and canonical unit scales.

All rotation matrices are passive: they map the components of a fixed vector
from the base frame into the rotated frame. The Earth-centered inertial frame
(ECI) is equatorial; the Moon-centered inertial frame (MCI) shares the vernal
x axis and is tilted about it by the ecliptic obliquity, so MCI axes coincide
with ecliptic axes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    ECLIPTIC_OBLIQUITY_RAD,
    MU_EARTH_KM3_S2,
    MU_MOON_KM3_S2,
    R_EARTH_KM,
    R_MOON_KM,
)
from .errors import SingularStateError


class BodyId(enum.Enum):
    SUN = "sun"
    EARTH = "earth"
    MOON = "moon"
    GATEWAY = "gateway"


class FrameTag(enum.Enum):
    ECI = "eci"
    MCI = "mci"
    SYNODIC = "synodic"
    LVLH = "lvlh"


def elementary_rotation(axis: int, angle_rad: float) -> np.ndarray:
    """Passive rotation matrix about a coordinate axis.

    Args:
        axis: 1, 2 or 3 for the x, y or z axis.
        angle_rad: rotation angle in radians.

    Returns:
        3x3 orthonormal matrix mapping base-frame components to
        rotated-frame components.

    Raises:
        ValueError: if the axis is not 1, 2 or 3, or the angle is not finite.
    """
    if axis not in (1, 2, 3):
        raise ValueError(f"rotation axis must be 1, 2 or 3, got {axis}")
    if not math.isfinite(angle_rad):
        raise ValueError(f"rotation angle must be finite, got {angle_rad}")
    c = math.cos(angle_rad)
    s = math.sin(angle_rad)
    if axis == 1:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    if axis == 2:
        return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def eci_to_mci_matrix() -> np.ndarray:
    """Constant tilt taking ECI components to MCI (ecliptic) components."""
    return elementary_rotation(1, ECLIPTIC_OBLIQUITY_RAD)


def mci_to_eci_matrix() -> np.ndarray:
    return eci_to_mci_matrix().T


def lvlh_basis(r_vec: np.ndarray, v_vec: np.ndarray) -> np.ndarray:
    """Rows of the radial / transversal / out-of-plane triad.

    The first row is the unit position, the third the unit angular momentum,
    and the second completes the right-handed set. Multiplying an inertial
    vector by the returned matrix gives its LVLH components.

    Raises:
        SingularStateError: if the angular momentum vanishes.
    """
    r = np.asarray(r_vec, dtype=float)
    v = np.asarray(v_vec, dtype=float)
    h = np.cross(r, v)
    h_norm = np.linalg.norm(h)
    r_norm = np.linalg.norm(r)
    if h_norm == 0.0 or r_norm == 0.0:
        raise SingularStateError("degenerate state: zero angular momentum")
    er = r / r_norm
    eh = h / h_norm
    et = np.cross(eh, er)
    return np.vstack((er, et, eh))


@dataclass(frozen=True)
class CanonicalScale:
    """Distance, time and velocity units that normalize one attractor.

    The distance unit is the body mean radius and the time unit makes the
    gravitational parameter equal to one.
    """

    mu_km3_s2: float
    du_km: float
    tu_s: float
    vu_km_s: float

    @classmethod
    def from_body(cls, mu_km3_s2: float, radius_km: float) -> "CanonicalScale":
        if mu_km3_s2 <= 0.0 or radius_km <= 0.0:
            raise ValueError(
                f"mu and radius must be positive, got {mu_km3_s2}, {radius_km}"
            )
        tu = math.sqrt(radius_km**3 / mu_km3_s2)
        return cls(
            mu_km3_s2=mu_km3_s2,
            du_km=radius_km,
            tu_s=tu,
            vu_km_s=radius_km / tu,
        )


def lunar_canonical() -> CanonicalScale:
    """Canonical units of the Moon (radius-based distance unit)."""
    return CanonicalScale.from_body(MU_MOON_KM3_S2, R_MOON_KM)


def earth_canonical() -> CanonicalScale:
    """Canonical units of the Earth."""
    return CanonicalScale.from_body(MU_EARTH_KM3_S2, R_EARTH_KM)


def synodic_axes(r_em_eci: np.ndarray, v_em_eci: np.ndarray) -> np.ndarray:
    """Rows of the Earth-Moon rotating triad from the instantaneous lunar state.

    x follows the Earth-to-Moon direction, z the lunar orbital angular
    momentum; components produced by this matrix are synodic.
    """
    return lvlh_basis(r_em_eci, v_em_eci)

"""Modified equinoctial elements and conversions.

The element set is (p, l, m, n, s, q): semilatus rectum, the two
eccentricity-vector components, the two inclination-vector components
built from tan(i/2), and the true longitude. The set is regular for
circular and equatorial orbits and singular only for i = 180 deg.

All conversions are unit-agnostic: lengths follow the unit of p and the
gravitational parameter fixes the velocity unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularStateError

_RETROGRADE_EPS = 1e-12


def wrap_angle(angle_rad: float) -> float:
    """Wrap to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(angle_rad, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class ClassicalElements:
    """Keplerian set (a, e, i, raan, argp, true anomaly), angles in radians."""

    a: float
    e: float
    i_rad: float
    raan_rad: float
    argp_rad: float
    ta_rad: float

    def __post_init__(self) -> None:
        if self.e < 0.0:
            raise ValueError(f"eccentricity must be non-negative, got {self.e}")
        if not 0.0 <= self.i_rad < math.pi:
            raise SingularStateError(
                f"inclination must lie in [0, pi), got {self.i_rad}"
            )
        if self.a * (1.0 - self.e**2) <= 0.0:
            raise ValueError("semilatus rectum a(1 - e^2) must be positive")


@dataclass(frozen=True)
class MeeState:
    """Equinoctial element vector; q may be unwrapped (multi-revolution)."""

    p: float
    l: float
    m: float
    n: float
    s: float
    q: float

    def __post_init__(self) -> None:
        if self.p <= 0.0 or not math.isfinite(self.p):
            raise ValueError(f"semilatus rectum must be positive, got {self.p}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.l, self.m, self.n, self.s, self.q])

    @classmethod
    def from_array(cls, z: np.ndarray) -> "MeeState":
        return cls(*(float(v) for v in z))


def coe_to_mee(coe: ClassicalElements) -> MeeState:
    """Classical to equinoctial elements; raises for i = 180 deg."""
    half_i = 0.5 * coe.i_rad
    if math.cos(half_i) == 0.0:
        raise SingularStateError("equinoctial set undefined for i = 180 deg")
    tan_half = math.tan(half_i)
    lon_peri = coe.raan_rad + coe.argp_rad
    return MeeState(
        p=coe.a * (1.0 - coe.e**2),
        l=coe.e * math.cos(lon_peri),
        m=coe.e * math.sin(lon_peri),
        n=tan_half * math.cos(coe.raan_rad),
        s=tan_half * math.sin(coe.raan_rad),
        q=lon_peri + coe.ta_rad,
    )


def mee_to_coe(mee: MeeState) -> ClassicalElements:
    """Equinoctial to classical elements with angles wrapped to (-pi, pi].

    For circular or equatorial orbits the undefined angles collapse to the
    usual convention: raan = 0 when i = 0, argp folds into the longitude of
    periapsis.
    """
    e = math.hypot(mee.l, mee.m)
    if abs(1.0 - e) < 1e-14:
        raise ValueError("parabolic state has no finite semimajor axis")
    tan_half = math.hypot(mee.n, mee.s)
    i = 2.0 * math.atan(tan_half)
    raan = math.atan2(mee.s, mee.n) if tan_half > 0.0 else 0.0
    lon_peri = math.atan2(mee.m, mee.l) if e > 0.0 else 0.0
    return ClassicalElements(
        a=mee.p / (1.0 - e**2),
        e=e,
        i_rad=i,
        raan_rad=wrap_angle(raan),
        argp_rad=wrap_angle(lon_peri - raan),
        ta_rad=wrap_angle(mee.q - lon_peri),
    )


def mee_to_cartesian(mee: MeeState, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Inertial position and velocity from equinoctial elements.

    Args:
        mee: element vector; q may be unwrapped.
        mu: gravitational parameter in units consistent with p.

    Returns:
        (r, v) arrays in the inertial frame of the element set.
    """
    p, l, m, n, s, q = mee.p, mee.l, mee.m, mee.n, mee.s, mee.q
    alpha2 = n * n - s * s
    sig2 = 1.0 + n * n + s * s
    cq = math.cos(q)
    sq = math.sin(q)
    eta = 1.0 + l * cq + m * sq
    if eta <= 0.0:
        raise SingularStateError(
            f"state on the open hyperbolic branch: 1 + l cos q + m sin q = {eta}"
        )
    r = p / eta
    ns2 = 2.0 * n * s
    r_vec = (r / sig2) * np.array(
        [
            cq + alpha2 * cq + ns2 * sq,
            sq - alpha2 * sq + ns2 * cq,
            2.0 * (n * sq - s * cq),
        ]
    )
    vscale = math.sqrt(mu / p) / sig2
    v_vec = vscale * np.array(
        [
            -(sq + alpha2 * sq - ns2 * cq + m - ns2 * l + alpha2 * m),
            -(-cq + alpha2 * cq + ns2 * sq - l + ns2 * m + alpha2 * l),
            2.0 * (n * cq + s * sq + l * n + m * s),
        ]
    )
    return r_vec, v_vec


def cartesian_to_mee(
    r_vec: np.ndarray, v_vec: np.ndarray, mu: float
) -> MeeState:
    """Equinoctial elements from an inertial state.

    Raises:
        SingularStateError: for zero angular momentum or a retrograde
            equatorial state (i = 180 deg).
    """
    r = np.asarray(r_vec, dtype=float)
    v = np.asarray(v_vec, dtype=float)
    h_vec = np.cross(r, v)
    h = np.linalg.norm(h_vec)
    r_norm = np.linalg.norm(r)
    if h == 0.0 or r_norm == 0.0:
        raise SingularStateError("degenerate state: zero angular momentum")
    h_hat = h_vec / h
    if 1.0 + h_hat[2] < _RETROGRADE_EPS:
        raise SingularStateError("equinoctial set undefined for i = 180 deg")
    n = -h_hat[1] / (1.0 + h_hat[2])
    s = h_hat[0] / (1.0 + h_hat[2])
    e_vec = np.cross(v, h_vec) / mu - r / r_norm
    sig2 = 1.0 + n * n + s * s
    f_hat = np.array([1.0 + n * n - s * s, 2.0 * n * s, -2.0 * s]) / sig2
    g_hat = np.array([2.0 * n * s, 1.0 - n * n + s * s, 2.0 * n]) / sig2
    return MeeState(
        p=h * h / mu,
        l=float(e_vec @ f_hat),
        m=float(e_vec @ g_hat),
        n=n,
        s=s,
        q=math.atan2(float(r @ g_hat), float(r @ f_hat)),
    )


def coe_to_cartesian(
    coe: ClassicalElements, mu: float
) -> tuple[np.ndarray, np.ndarray]:
    """Inertial state from classical elements via the perifocal frame."""
    p = coe.a * (1.0 - coe.e**2)
    r = p / (1.0 + coe.e * math.cos(coe.ta_rad))
    r_pf = np.array(
        [r * math.cos(coe.ta_rad), r * math.sin(coe.ta_rad), 0.0]
    )
    vs = math.sqrt(mu / p)
    v_pf = np.array(
        [-vs * math.sin(coe.ta_rad), vs * (coe.e + math.cos(coe.ta_rad)), 0.0]
    )
    cO, sO = math.cos(coe.raan_rad), math.sin(coe.raan_rad)
    ci, si = math.cos(coe.i_rad), math.sin(coe.i_rad)
    cw, sw = math.cos(coe.argp_rad), math.sin(coe.argp_rad)
    rot = np.array(
        [
            [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
            [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
            [sw * si, cw * si, ci],
        ]
    )
    return rot @ r_pf, rot @ v_pf


def cartesian_to_coe(
    r_vec: np.ndarray, v_vec: np.ndarray, mu: float
) -> ClassicalElements:
    """Classical elements from an inertial state (non-parabolic)."""
    return mee_to_coe(cartesian_to_mee(r_vec, v_vec, mu))

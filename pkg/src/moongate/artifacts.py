"""Deterministic CSV and JSON artifacts of a propagated transfer.

Four tables describe one trajectory: the node history in the per-arc
canonical systems (elements, adjoints, steering angles, mass), the orbit
shape and thrust angles on plotting axes (kilometers, degrees, days), and
the path resolved in the rotating Earth-Moon barycentric frame.  All carry
enough metadata in their headers to be consumed without the originating
session.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np

from .constants import MU_EARTH_KM3_S2, MU_MOON_KM3_S2
from .ephemeris import Ephemeris
from .frames import BodyId, FrameTag, eci_to_mci_matrix
from .mee import MeeState, mee_to_cartesian
from .propagation import Trajectory

TRAJECTORY_HEADER = (
    "tau_s,epoch_s,p,l,m,n,s,q,mass_ratio,"
    "lam_p,lam_l,lam_m,lam_n,lam_s,lam_q,alpha_rad,beta_rad,arc"
)

SYNODIC_HEADER = "epoch_s,x_km,y_km,z_km,r_earth_km,r_moon_km,arc"

ELEMENTS_HEADER = "t_days,p_km,e,i_deg,arc"

ANGLES_HEADER = "t_days,alpha_deg,beta_deg,arc"

_MCI_TO_ECI = eci_to_mci_matrix().T


def write_trajectory_csv(path, traj: Trajectory) -> str:
    """Node history; canonical units of the node's arc (column `arc`:
    0 Moon-centered, 1 Earth-centered)."""
    out = io.StringIO()
    out.write(f"# direction={traj.direction:+d} anchor_epoch_s={traj.anchor_epoch_s:.3f}\n")
    out.write(TRAJECTORY_HEADER + "\n")
    for k in range(len(traj.tau_s)):
        z = traj.states[k, :6]
        lam = traj.states[k, 6:12]
        fields = [
            f"{traj.tau_s[k]:.6f}",
            f"{traj.epoch_s[k]:.6f}",
            *(f"{v:.12e}" for v in z),
            f"{traj.mass_ratios[k]:.12e}",
            *(f"{v:.12e}" for v in lam),
            f"{traj.controls[k, 0]:.12e}",
            f"{traj.controls[k, 1]:.12e}",
            str(int(traj.arc_ids[k])),
        ]
        out.write(",".join(fields) + "\n")
    text = out.getvalue()
    Path(path).write_text(text)
    return text


def write_elements_csv(path, traj: Trajectory) -> str:
    """Orbit-shape history on plotting axes: semi-latus rectum in
    kilometers, eccentricity modulus, inclination in degrees, against days
    of swept time from the anchored end."""
    out = io.StringIO()
    out.write(f"# direction={traj.direction:+d}\n")
    out.write(ELEMENTS_HEADER + "\n")
    for k in range(len(traj.tau_s)):
        z = traj.states[k, :6]
        du_km = traj.scales[int(traj.arc_ids[k])].du_km
        ecc = math.hypot(z[1], z[2])
        inc_deg = math.degrees(2.0 * math.atan(math.hypot(z[3], z[4])))
        fields = [
            f"{traj.tau_s[k] / 86400.0:.8f}",
            f"{z[0] * du_km:.6f}",
            f"{ecc:.9f}",
            f"{inc_deg:.6f}",
            str(int(traj.arc_ids[k])),
        ]
        out.write(",".join(fields) + "\n")
    text = out.getvalue()
    Path(path).write_text(text)
    return text


def write_angles_csv(path, traj: Trajectory) -> str:
    """Steering-angle history in degrees against days of swept time; the
    in-plane angle lands in (-180, 180] by construction."""
    out = io.StringIO()
    out.write(f"# direction={traj.direction:+d}\n")
    out.write(ANGLES_HEADER + "\n")
    for k in range(len(traj.tau_s)):
        fields = [
            f"{traj.tau_s[k] / 86400.0:.8f}",
            f"{math.degrees(traj.controls[k, 0]):.6f}",
            f"{math.degrees(traj.controls[k, 1]):.6f}",
            str(int(traj.arc_ids[k])),
        ]
        out.write(",".join(fields) + "\n")
    text = out.getvalue()
    Path(path).write_text(text)
    return text


def craft_geocentric_km(traj: Trajectory, k: int, eph: Ephemeris) -> np.ndarray:
    """ECI position of node k in kilometers."""
    scale = traj.scales[int(traj.arc_ids[k])]
    r_canon, _ = mee_to_cartesian(MeeState.from_array(traj.states[k, :6]), 1.0)
    r_km = r_canon * scale.du_km
    if traj.arc_ids[k] == 0:
        moon = eph.body_state(
            BodyId.MOON, float(traj.epoch_s[k]), BodyId.EARTH, FrameTag.ECI
        )
        return moon.r_km + _MCI_TO_ECI @ r_km
    return r_km


_MOON_MASS_FRACTION = MU_MOON_KM3_S2 / (MU_EARTH_KM3_S2 + MU_MOON_KM3_S2)


def write_synodic_csv(path, traj: Trajectory, eph: Ephemeris) -> str:
    """Path on rotating Earth-Moon axes, origin at the two-body barycenter.

    x points from Earth at the Moon, z along the instantaneous lunar orbit
    normal; Earth and Moon sit on the x axis at their instantaneous
    barycentric distances.
    """
    out = io.StringIO()
    out.write(
        f"# frame=EARTH_MOON_ROTATING center=BARYCENTER direction={traj.direction:+d}\n"
    )
    out.write(SYNODIC_HEADER + "\n")
    for k in range(len(traj.tau_s)):
        epoch = float(traj.epoch_s[k])
        moon = eph.body_state(BodyId.MOON, epoch, BodyId.EARTH, FrameTag.ECI)
        e_x = moon.r_km / np.linalg.norm(moon.r_km)
        normal = np.cross(moon.r_km, moon.v_kms)
        e_z = normal / np.linalg.norm(normal)
        e_y = np.cross(e_z, e_x)
        r = craft_geocentric_km(traj, k, eph)
        bary = _MOON_MASS_FRACTION * moon.r_km
        rel = r - bary
        rot = np.array([rel @ e_x, rel @ e_y, rel @ e_z])
        r_moon = r - moon.r_km if traj.arc_ids[k] == 1 else None
        if r_moon is None:
            scale = traj.scales[0]
            r_canon, _ = mee_to_cartesian(
                MeeState.from_array(traj.states[k, :6]), 1.0
            )
            dist_moon = float(np.linalg.norm(r_canon)) * scale.du_km
        else:
            dist_moon = float(np.linalg.norm(r_moon))
        fields = [
            f"{epoch:.6f}",
            f"{rot[0]:.6f}",
            f"{rot[1]:.6f}",
            f"{rot[2]:.6f}",
            f"{np.linalg.norm(r):.6f}",
            f"{dist_moon:.6f}",
            str(int(traj.arc_ids[k])),
        ]
        out.write(",".join(fields) + "\n")
    text = out.getvalue()
    Path(path).write_text(text)
    return text

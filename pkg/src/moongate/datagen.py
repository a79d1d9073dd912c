"""Builders for the packaged state tables.

The transfer arcs treat the Moon as a point mass moving through an
Earth-Sun field. The adjoint pairing across the attractor hand-off only
closes when the lunar ephemeris obeys that same field: the Moon-centered
and Earth-centered Hamiltonians differ by the adjoint contracted with the
defect between the Moon's modeled and actual acceleration. A mean-element
ellipse leaves a defect at the solar-tide level, so the packaged Moon
table is integrated from a mean-element snapshot in the model field

    r''  =  -(mu_E + mu_M) r / |r|^3  +  solar tide at the Moon,

and the Gateway table is integrated around that Moon with the full
Moon-centered field.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from . import constants
from .dynamics import moon_model_accel, third_body_accel
from .ephemeris import Ephemeris, StateTable, analytic_ephemeris
from .epochs import utc_to_seconds_past_j2000
from .frames import BodyId, FrameTag
from .mee import ClassicalElements, coe_to_cartesian

MOON_TABLE_STEP_S = 3600.0
GATEWAY_TABLE_STEP_S = 240.0

# Packaged table spans: the Moon covers every epoch the longest transfer
# can reach from the departure window, both directions, with margin; the
# Gateway covers the window plus more than one revolution.
MOON_TABLE_SPAN_UTC = ("2024-11-20T00:00:00", "2025-12-05T00:00:00")
GATEWAY_TABLE_SPAN_UTC = ("2025-05-22T00:00:00", "2025-06-01T00:00:00")

_IVP_OPTS = dict(method="DOP853", rtol=1e-12, atol=1e-9, dense_output=False)


def _anchor_epoch_s(anchor_s: float | None) -> float:
    if anchor_s is not None:
        return anchor_s
    return utc_to_seconds_past_j2000(constants.GATEWAY_ANCHOR_UTC)


def _two_sided_grid(start_s: float, end_s: float, step_s: float, anchor_s: float):
    # Nodes sit at anchor + k * step so the anchor state - the one datum the
    # table is defined by - is stored exactly, not interpolated. The grid may
    # overhang the requested span by less than one step.
    if not start_s < end_s:
        raise ValueError("table span must have positive length")
    if not start_s <= anchor_s <= end_s:
        raise ValueError("anchor epoch must lie inside the table span")
    k0 = int(math.floor((start_s - anchor_s) / step_s))
    k1 = int(math.ceil((end_s - anchor_s) / step_s))
    return anchor_s + step_s * np.arange(k0, k1 + 1)


def _integrate_two_sided(rhs, y0: np.ndarray, grid: np.ndarray, anchor_s: float):
    """Sample the solution through `anchor_s` on `grid`, both directions."""
    rows = np.empty((len(grid), 6))
    back = grid[grid < anchor_s]
    fwd = grid[grid >= anchor_s]
    if len(back):
        sol = solve_ivp(
            rhs, (anchor_s, back[0]), y0, t_eval=back[::-1], **_IVP_OPTS
        )
        if not sol.success:
            raise RuntimeError(f"table integration failed: {sol.message}")
        rows[: len(back)] = sol.y.T[::-1]
    if len(fwd):
        sol = solve_ivp(rhs, (anchor_s, fwd[-1]), y0, t_eval=fwd, **_IVP_OPTS)
        if not sol.success:
            raise RuntimeError(f"table integration failed: {sol.message}")
        rows[len(back) :] = sol.y.T
    return rows


def generate_moon_table(
    start_s: float,
    end_s: float,
    step_s: float = MOON_TABLE_STEP_S,
    anchor_s: float | None = None,
) -> StateTable:
    """Geocentric lunar states integrated in the model force field.

    The initial condition is the mean-element lunar state at the anchor
    epoch, so the table stays close to the familiar ellipse while its
    acceleration matches the point-mass model exactly.
    """
    analytic = analytic_ephemeris()
    anchor = _anchor_epoch_s(anchor_s)
    r0, v0 = analytic.moon_from_earth_eci(anchor)

    def rhs(t, y):
        sun_r, _ = analytic.sun_from_earth_eci(t)
        return np.concatenate([y[3:], moon_model_accel(y[:3], sun_r)])

    grid = _two_sided_grid(start_s, end_s, step_s, anchor)
    rows = _integrate_two_sided(rhs, np.concatenate([r0, v0]), grid, anchor)
    return StateTable(grid, rows[:, :3], rows[:, 3:], FrameTag.ECI, BodyId.EARTH)


def gateway_anchor_state_mci() -> tuple[np.ndarray, np.ndarray]:
    """Reference-orbit Cartesian state at the anchor epoch (km, km/s)."""
    coe = constants.GATEWAY_COE_MCI
    elements = ClassicalElements(
        a=coe["a_km"],
        e=coe["e"],
        i_rad=math.radians(coe["i_deg"]),
        raan_rad=math.radians(coe["raan_deg"]),
        argp_rad=math.radians(coe["argp_deg"]),
        ta_rad=math.radians(coe["ta_deg"]),
    )
    return coe_to_cartesian(elements, constants.MU_MOON_KM3_S2)


def generate_gateway_table(
    moon_table: StateTable,
    start_s: float,
    end_s: float,
    step_s: float = GATEWAY_TABLE_STEP_S,
    anchor_s: float | None = None,
) -> StateTable:
    """Moon-centered Gateway states integrated around the supplied Moon."""
    eph = Ephemeris(moon_table=moon_table)
    anchor = _anchor_epoch_s(anchor_s)
    r0, v0 = gateway_anchor_state_mci()

    def rhs(t, y):
        r = y[:3]
        earth = eph.body_state(BodyId.EARTH, t, BodyId.MOON, FrameTag.MCI)
        sun = eph.body_state(BodyId.SUN, t, BodyId.MOON, FrameTag.MCI)
        acc = (
            -constants.MU_MOON_KM3_S2 * r / np.linalg.norm(r) ** 3
            + third_body_accel(r, earth.r_km, constants.MU_EARTH_KM3_S2)
            + third_body_accel(r, sun.r_km, constants.MU_SUN_KM3_S2)
        )
        return np.concatenate([y[3:], acc])

    grid = _two_sided_grid(start_s, end_s, step_s, anchor)
    rows = _integrate_two_sided(rhs, np.concatenate([r0, v0]), grid, anchor)
    return StateTable(grid, rows[:, :3], rows[:, 3:], FrameTag.MCI, BodyId.MOON)


def write_bundled_tables(out_dir) -> tuple[str, str]:
    """Regenerate the packaged CSV tables; returns the file paths."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m0, m1 = (utc_to_seconds_past_j2000(u) for u in MOON_TABLE_SPAN_UTC)
    g0, g1 = (utc_to_seconds_past_j2000(u) for u in GATEWAY_TABLE_SPAN_UTC)
    moon = generate_moon_table(m0, m1)
    gateway = generate_gateway_table(moon, g0, g1)
    moon_path = out / "moon_eci.csv"
    gateway_path = out / "gateway_mci.csv"
    moon_path.write_text(moon.to_csv_text())
    gateway_path.write_text(gateway.to_csv_text())
    return str(moon_path), str(gateway_path)

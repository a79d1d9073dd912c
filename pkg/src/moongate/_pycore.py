"""Pure-Python propagation core.

Mirrors the compiled extension: same Dormand-Prince 5(4) scheme, same
parameter layout, same outputs. Used when the extension is unavailable and
as the reference implementation in equivalence tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import perturbing_accel_lvlh, thrust_direction_lvlh
from .ephemeris import solve_kepler
from .errors import SingularStateError
from .frames import eci_to_mci_matrix
from .indirect import (
    costate_rates,
    hamiltonian_split,
    mee_state_rates,
    optimal_controls,
)
from .mee import MeeState, mee_to_cartesian

BACKEND_NAME = "python"

# Step outcome codes shared with the compiled core.
STATUS_OK = 0
STATUS_EVENT = 1
STATUS_EXHAUSTED = 2
STATUS_MIN_STEP = 3
STATUS_MAX_STEPS = 4
STATUS_NON_FINITE = 5
STATUS_SINGULAR = 6

_SINGULAR_SWITCH = 1e-14

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1.0 / 5.0]),
    np.array([3.0 / 40.0, 9.0 / 40.0]),
    np.array([44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]),
    np.array([19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0]),
    np.array(
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
        ]
    ),
    np.array(
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ]
    ),
]
_B5 = np.append(_A[6], 0.0)
_B4 = np.array(
    [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ]
)


@dataclass
class EphPack:
    """Base geocentric sources: the Moon (table or precessing Kepler orbit)
    and the Sun (Kepler orbit). Kepler packs are

    (a, e, i, raan0, raan_rate, peri_lon0, peri_lon_rate, m0, mean_motion)

    with km, radians, seconds; tables are ECI kilometers.
    """

    moon_mode: int  # 0 kepler, 1 table
    moon_kepler: np.ndarray
    sun_kepler: np.ndarray
    moon_epochs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    moon_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    moon_vel: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))


@dataclass
class ArcParams:
    """Everything one arc integration needs, in flat numeric form."""

    direction: float
    anchor_epoch_s: float
    tu_s: float
    du_km: float
    ut_max_km_s2: float
    c_km_s: float
    tau_fin_s: float
    tau_offset_s: float
    thrust_on: bool
    forward_mass: bool
    eph: EphPack
    tilt: np.ndarray  # 3x3, ECI components -> arc axes
    pert_mu: np.ndarray  # canonical mu of each perturber
    pert_w_moon: np.ndarray
    pert_w_sun: np.ndarray
    fd_step: float = 1e-7
    frozen: bool = False
    event_threshold_canon: float = -1.0  # negative disables the event
    event_w_moon: float = 0.0
    event_w_sun: float = 0.0
    last_alpha: float = 0.0
    last_beta: float = 0.0


def _kepler_state_ecliptic(pack: np.ndarray, epoch_s: float) -> np.ndarray:
    """Position only, km, ecliptic axes; mirrors KeplerOrbit.state_ecliptic."""
    a, e, inc, raan0, raan_rate, pl0, pl_rate, m0, n_mean = pack
    raan = raan0 + raan_rate * epoch_s
    argp = (pl0 + pl_rate * epoch_s) - raan
    ecc = solve_kepler(m0 + n_mean * epoch_s, e)
    b = a * math.sqrt(1.0 - e * e)
    x_pf = a * (math.cos(ecc) - e)
    y_pf = b * math.sin(ecc)
    ca, sa = math.cos(argp), math.sin(argp)
    x1 = ca * x_pf - sa * y_pf
    y1 = sa * x_pf + ca * y_pf
    ci, si = math.cos(inc), math.sin(inc)
    y2 = ci * y1
    z2 = si * y1
    cr, sr = math.cos(raan), math.sin(raan)
    return np.array([cr * x1 - sr * y2, sr * x1 + cr * y2, z2])


def _hermite_pos(eph: EphPack, epoch_s: float) -> np.ndarray:
    ts = eph.moon_epochs
    if not ts[0] <= epoch_s <= ts[-1]:
        raise SingularStateError(
            f"moon table exhausted at epoch {epoch_s:.1f} s"
        )
    idx = int(np.searchsorted(ts, epoch_s, side="right") - 1)
    idx = min(max(idx, 0), len(ts) - 2)
    h = ts[idx + 1] - ts[idx]
    th = (epoch_s - ts[idx]) / h
    t2 = th * th
    t3 = t2 * th
    return (
        (2.0 * t3 - 3.0 * t2 + 1.0) * eph.moon_pos[idx]
        + (t3 - 2.0 * t2 + th) * h * eph.moon_vel[idx]
        + (-2.0 * t3 + 3.0 * t2) * eph.moon_pos[idx + 1]
        + (t3 - t2) * h * eph.moon_vel[idx + 1]
    )


# Ecliptic components -> ECI components (constant obliquity tilt).
_ECL_TO_ECI = eci_to_mci_matrix().T


def _moon_eci_km(P: ArcParams, epoch_s: float) -> np.ndarray:
    if P.eph.moon_mode == 1:
        return _hermite_pos(P.eph, epoch_s)
    return _ECL_TO_ECI @ _kepler_state_ecliptic(P.eph.moon_kepler, epoch_s)


def _sun_eci_km(P: ArcParams, epoch_s: float) -> np.ndarray:
    return _ECL_TO_ECI @ _kepler_state_ecliptic(P.eph.sun_kepler, epoch_s)


def _bodies_at(P: ArcParams, epoch_s: float) -> list[tuple[float, np.ndarray]]:
    if len(P.pert_mu) == 0:
        return []
    moon = None
    sun = None
    out = []
    for k in range(len(P.pert_mu)):
        base = np.zeros(3)
        if P.pert_w_moon[k] != 0.0:
            if moon is None:
                moon = _moon_eci_km(P, epoch_s)
            base = base + P.pert_w_moon[k] * moon
        if P.pert_w_sun[k] != 0.0:
            if sun is None:
                sun = _sun_eci_km(P, epoch_s)
            base = base + P.pert_w_sun[k] * sun
        out.append((float(P.pert_mu[k]), (P.tilt @ base) / P.du_km))
    return out


def _epoch_at(P: ArcParams, tau_hat: float) -> float:
    if P.frozen:
        return P.anchor_epoch_s
    return P.anchor_epoch_s + P.direction * tau_hat * P.tu_s


def _swept_s(P: ArcParams, tau_hat: float) -> float:
    if P.frozen:
        tau_hat = 0.0
    return P.tau_offset_s + tau_hat * P.tu_s


def mass_ratio(P: ArcParams, tau_hat: float) -> float:
    if not P.thrust_on:
        return 1.0
    swept = _swept_s(P, tau_hat)
    burned = swept if P.forward_mass else (P.tau_fin_s - swept)
    return 1.0 - (P.ut_max_km_s2 / P.c_km_s) * burned


def _thrust_accel_canon(P: ArcParams, m_ratio: float) -> float:
    return (P.ut_max_km_s2 / m_ratio) * P.tu_s**2 / P.du_km


def rhs(tau_hat: float, y: np.ndarray, P: ArcParams) -> np.ndarray:
    """Coupled element/adjoint rates in swept canonical time."""
    z = y[:6]
    lam = y[6:12]
    bodies = _bodies_at(P, _epoch_at(P, tau_hat))
    a_pert = perturbing_accel_lvlh(z, bodies)
    split = hamiltonian_split(z, lam, a_pert, P.direction)
    if P.thrust_on:
        m_ratio = mass_ratio(P, tau_hat)
        if m_ratio <= 0.0:
            raise _Exhausted()
        a_t = _thrust_accel_canon(P, m_ratio)
        if split.switch_magnitude > _SINGULAR_SWITCH:
            alpha, beta = optimal_controls(split)
            P.last_alpha, P.last_beta = alpha, beta
        else:
            alpha, beta = P.last_alpha, P.last_beta
        a_thrust = a_t * thrust_direction_lvlh(alpha, beta)
    else:
        a_t = 0.0
        a_thrust = np.zeros(3)
    z_dot = mee_state_rates(z, a_pert, a_thrust, P.direction)
    lam_dot = costate_rates(z, lam, bodies, a_t, P.direction, P.fd_step)
    return np.concatenate([z_dot, lam_dot])


class _Exhausted(Exception):
    pass


def _stall_status(P: ArcParams, tau_hat: float) -> int:
    """Classify a step-size collapse.

    Thrust acceleration scales with 1/m, so a forward arc burning its last
    propellant stiffens continuously and stalls the controller just before
    the mass-zero exception can trigger; the remaining mass there is many
    orders below any healthy value.
    """
    if P.thrust_on and mass_ratio(P, tau_hat) <= 1e-6:
        return STATUS_EXHAUSTED
    return STATUS_MIN_STEP


def node_outputs(tau_hat: float, y: np.ndarray, P: ArcParams):
    """Split, controls, composed Hamiltonian, and mass ratio at a node."""
    z = y[:6]
    lam = y[6:12]
    bodies = _bodies_at(P, _epoch_at(P, tau_hat))
    a_pert = perturbing_accel_lvlh(z, bodies)
    split = hamiltonian_split(z, lam, a_pert, P.direction)
    m_ratio = mass_ratio(P, tau_hat)
    a_t = (
        _thrust_accel_canon(P, m_ratio)
        if (P.thrust_on and m_ratio > 0.0)
        else 0.0
    )
    if split.switch_magnitude > _SINGULAR_SWITCH:
        alpha, beta = optimal_controls(split)
    else:
        alpha, beta = P.last_alpha, P.last_beta
    h_star = split.h_free - a_t * split.switch_magnitude
    return split, alpha, beta, h_star, m_ratio


def event_value(tau_hat: float, y: np.ndarray, P: ArcParams) -> float:
    """Signed canonical distance to the switching sphere (positive outside)."""
    epoch = _epoch_at(P, tau_hat)
    base = np.zeros(3)
    if P.event_w_moon != 0.0:
        base = base + P.event_w_moon * _moon_eci_km(P, epoch)
    if P.event_w_sun != 0.0:
        base = base + P.event_w_sun * _sun_eci_km(P, epoch)
    center = (P.tilt @ base) / P.du_km
    r, _ = mee_to_cartesian(MeeState.from_array(y[:6]), 1.0)
    return float(np.linalg.norm(r - center)) - P.event_threshold_canon


@dataclass
class RawArc:
    """Per-node history of one integrated arc."""

    taus: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    controls: np.ndarray
    splits: np.ndarray
    hamiltonians: np.ndarray
    mass_ratios: np.ndarray
    status: int
    n_rhs: int


def _initial_step(y0: np.ndarray, max_step: float) -> float:
    p = float(y0[0])
    guess = 0.02 * 2.0 * math.pi * p**1.5
    return min(guess, max_step)


def propagate_raw(
    y0: np.ndarray,
    tau_end_hat: float,
    P: ArcParams,
    rtol: float,
    atol: float,
    max_step_hat: float,
    max_steps: int,
) -> RawArc:
    """Adaptive fifth-order integration over swept time [0, tau_end_hat].

    Stops early on the switching-sphere event (downward crossing), on
    propellant exhaustion, or on integrator failure; the status field says
    which. Nodes are the accepted steps, each with its derivative so a cubic
    interpolant is available between any pair.
    """
    y = np.array(y0, dtype=float)
    if y.shape != (12,):
        raise ValueError(f"state vector must have 12 components, got {y.shape}")
    taus = [0.0]
    states = [y.copy()]
    n_rhs = 0
    status = STATUS_OK

    def call(tau_hat, yy):
        nonlocal n_rhs
        n_rhs += 1
        return rhs(tau_hat, yy, P)

    try:
        f_now = call(0.0, y)
    except _Exhausted:
        return _finalize([0.0], [y], [np.zeros(12)], P, STATUS_EXHAUSTED, n_rhs)
    except SingularStateError:
        return _finalize([0.0], [y], [np.zeros(12)], P, STATUS_SINGULAR, n_rhs)
    derivs = [f_now.copy()]
    event_on = P.event_threshold_canon > 0.0
    g_prev = event_value(0.0, y, P) if event_on else 1.0

    # Forward arcs burn monotonically, so the mass-zero time is known in
    # closed form. Stop a hair short of it (thrust acceleration diverges as
    # 1/m) and report the arc as exhausted instead of grinding the step
    # size down against the singularity.
    stop_hat = tau_end_hat
    will_exhaust = False
    if P.thrust_on and P.forward_mass:
        zero_burn_s = P.c_km_s / P.ut_max_km_s2
        if P.tau_offset_s + tau_end_hat * P.tu_s >= zero_burn_s:
            will_exhaust = True
            floor_s = zero_burn_s * (1.0 - 1e-3)
            stop_hat = max(0.0, (floor_s - P.tau_offset_s) / P.tu_s)

    tau = 0.0
    h = min(_initial_step(y, max_step_hat), tau_end_hat)
    min_step = max(tau_end_hat * 1e-14, 1e-13)
    steps = 0
    ks = np.empty((7, 12))
    while tau < stop_hat:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        steps += 1
        h = min(h, stop_hat - tau)
        ks[0] = f_now
        failed_inside = None
        try:
            for i in range(1, 7):
                yi = y + h * (ks[:i].T @ _A[i])
                ks[i] = call(tau + _C[i] * h, yi)
        except _Exhausted:
            failed_inside = STATUS_EXHAUSTED
        except SingularStateError:
            failed_inside = STATUS_SINGULAR
        if failed_inside is not None:
            # Shrink toward the failure; if the step is already tiny the
            # condition is real and the arc ends here.
            if h <= 4.0 * min_step:
                status = failed_inside
                break
            h *= 0.25
            continue
        y_new = y + h * (ks.T @ _B5)
        err_vec = h * (ks.T @ (_B5 - _B4))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if not math.isfinite(err):
            status = (
                STATUS_EXHAUSTED
                if _stall_status(P, tau) == STATUS_EXHAUSTED
                else STATUS_NON_FINITE
            )
            break
        if err <= 1.0:
            tau_new = tau + h
            # Last stage sits at (tau + h, y_new): first-same-as-last.
            f_new = ks[6].copy()
            taus.append(tau_new)
            states.append(y_new.copy())
            derivs.append(f_new.copy())
            if event_on:
                g_new = event_value(tau_new, y_new, P)
                if g_prev > 0.0 >= g_new:
                    status = STATUS_EVENT
                    tau, y, f_now = tau_new, y_new, f_new
                    break
                g_prev = g_new
            tau, y, f_now = tau_new, y_new, f_new
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err**-0.2))
            h = min(h * factor, max_step_hat)
        else:
            h *= max(0.2, 0.9 * err**-0.2)
        if h < min_step:
            status = _stall_status(P, tau)
            break
    if will_exhaust and status == STATUS_OK:
        status = STATUS_EXHAUSTED
    return _finalize(taus, states, derivs, P, status, n_rhs)


def _finalize(taus, states, derivs, P: ArcParams, status: int, n_rhs: int) -> RawArc:
    n = len(taus)
    controls = np.empty((n, 2))
    splits = np.empty((n, 4))
    hams = np.empty(n)
    mrs = np.empty(n)
    for k in range(n):
        try:
            split, alpha, beta, h_star, m_ratio = node_outputs(taus[k], states[k], P)
        except (SingularStateError, ValueError):
            controls[k] = np.nan
            splits[k] = np.nan
            hams[k] = np.nan
            mrs[k] = np.nan
            continue
        controls[k] = (alpha, beta)
        splits[k] = (split.h_free, split.h_r, split.h_t, split.h_h)
        hams[k] = h_star
        mrs[k] = m_ratio
    return RawArc(
        taus=np.array(taus),
        states=np.array(states),
        derivs=np.array(derivs),
        controls=controls,
        splits=splits,
        hamiltonians=hams,
        mass_ratios=mrs,
        status=status,
        n_rhs=n_rhs,
    )

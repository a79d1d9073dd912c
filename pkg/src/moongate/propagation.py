"""Trajectory propagation on top of the numeric cores.

A compiled extension carries the inner loop when available; a pure-Python
twin is selected otherwise (or when MOONGATE_PURE=1). Both expose the same
raw interface; everything here is backend-agnostic bookkeeping: canonical
scaling, event refinement, the two-arc hand-off, and result assembly.
"""

from __future__ import annotations

import importlib
import math
import os
from dataclasses import dataclass

import numpy as np

from . import constants
from .ephemeris import Ephemeris
from .errors import (
    NoTransitionError,
    PropagationError,
    PropellantExhaustedError,
)
from .frames import (
    BodyId,
    CanonicalScale,
    earth_canonical,
    eci_to_mci_matrix,
    lunar_canonical,
)
from .multiarc import (
    TransitionRecord,
    chain_costate,
    chain_state,
    earth_distance_km,
    transform_time_partial,
    transition_jacobian,
)
from . import _pycore

_STATUS_MESSAGES = {
    _pycore.STATUS_MIN_STEP: "step size collapsed",
    _pycore.STATUS_MAX_STEPS: "step budget exhausted",
    _pycore.STATUS_NON_FINITE: "non-finite state encountered",
    _pycore.STATUS_SINGULAR: "state left the representable set",
    _pycore.STATUS_EXHAUSTED: "propellant exhausted",
}


def _compiled_core():
    """The extension module, or None if absent or from a stale build."""
    try:
        module = importlib.import_module("moongate._core")
    except ImportError:
        return None
    return module if hasattr(module, "propagate_raw") else None


def _load_backend():
    if os.environ.get("MOONGATE_PURE", "") == "1":
        return _pycore
    return _compiled_core() or _pycore


_BACKEND = _load_backend()


def active_backend() -> str:
    """Name of the numeric core in use ('compiled' or 'python')."""
    return _BACKEND.BACKEND_NAME


def backend_module(name: str | None = None):
    """Resolve a core by name; None gives the active default."""
    if name is None:
        return _BACKEND
    if name == "python":
        return _pycore
    if name == "compiled":
        module = _compiled_core()
        if module is None:
            raise ValueError("compiled core is not available")
        return module
    raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class PropagationConfig:
    """Integrator settings; tolerances are canonical."""

    rtol: float = 1e-10
    atol: float = 1e-12
    max_step_s: float = math.inf
    max_steps: int = 2_000_000
    fd_step: float = 1e-7

    def __post_init__(self) -> None:
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Propulsion:
    """Constant-exhaust low-thrust engine at full throttle."""

    ut_max_km_s2: float = constants.UT_MAX_KM_S2
    c_km_s: float = constants.EXHAUST_VELOCITY_KM_S


@dataclass
class Trajectory:
    """Node history of a propagated transfer leg.

    States are canonical in the per-node arc system (`arc_ids` 0 for the
    Moon-centered representation, 1 for the Earth-centered one); `tau_s` is
    swept time in seconds from the anchored end, `epoch_s` the calendar
    epoch of each node.
    """

    direction: int
    anchor_epoch_s: float
    tau_s: np.ndarray
    epoch_s: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    controls: np.ndarray
    splits: np.ndarray
    hamiltonians: np.ndarray
    mass_ratios: np.ndarray
    arc_ids: np.ndarray
    scales: dict[int, CanonicalScale]
    transition: TransitionRecord | None = None
    n_rhs: int = 0

    @property
    def tof_s(self) -> float:
        return float(self.tau_s[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1, :6]

    @property
    def final_costate(self) -> np.ndarray:
        return self.states[-1, 6:12]

    @property
    def final_hamiltonian(self) -> float:
        return float(self.hamiltonians[-1])

    @property
    def final_mass_ratio(self) -> float:
        return float(self.mass_ratios[-1])

    def hamiltonians_per_s(self) -> np.ndarray:
        out = np.empty_like(self.hamiltonians)
        for arc, scale in self.scales.items():
            sel = self.arc_ids == arc
            out[sel] = self.hamiltonians[sel] / scale.tu_s
        return out


def _kepler_pack(orbit) -> np.ndarray:
    return np.array(
        [
            orbit.a_km,
            orbit.e,
            orbit.i_rad,
            orbit.raan0_rad,
            orbit.raan_rate_rad_s,
            orbit.peri_lon0_rad,
            orbit.peri_lon_rate_rad_s,
            orbit.m0_rad,
            orbit.mean_motion_rad_s,
        ]
    )


def _eph_pack(backend, eph: Ephemeris):
    if eph.sun_table is not None:
        raise ValueError("flight kernels require the analytic solar source")
    moon_kepler = _kepler_pack(eph._moon_kepler)
    sun_kepler = _kepler_pack(eph._sun_kepler)
    if eph.moon_table is not None:
        return backend.EphPack(
            moon_mode=1,
            moon_kepler=moon_kepler,
            sun_kepler=sun_kepler,
            moon_epochs=eph.moon_table.epochs_s,
            moon_pos=eph.moon_table.pos_km,
            moon_vel=eph.moon_table.vel_kms,
        )
    return backend.EphPack(
        moon_mode=0, moon_kepler=moon_kepler, sun_kepler=sun_kepler
    )


def _arc_params(
    backend,
    center: BodyId,
    direction: int,
    anchor_epoch_s: float,
    tau_fin_s: float,
    tau_offset_s: float,
    propulsion: Propulsion,
    eph: Ephemeris,
    cfg: PropagationConfig,
    thrust_on: bool,
    perturbations_on: bool,
    event_on: bool,
    frozen: bool,
    forward_mass: bool,
):
    if center is BodyId.MOON:
        scale = lunar_canonical()
        tilt = eci_to_mci_matrix()
        if perturbations_on:
            mu = np.array(
                [
                    constants.MU_EARTH_KM3_S2 / constants.MU_MOON_KM3_S2,
                    constants.MU_SUN_KM3_S2 / constants.MU_MOON_KM3_S2,
                ]
            )
            w_moon = np.array([-1.0, -1.0])
            w_sun = np.array([0.0, 1.0])
        else:
            mu = np.zeros(0)
            w_moon = np.zeros(0)
            w_sun = np.zeros(0)
        event_w_moon, event_w_sun = -1.0, 0.0
    elif center is BodyId.EARTH:
        scale = earth_canonical()
        tilt = np.eye(3)
        if perturbations_on:
            mu = np.array(
                [
                    constants.MU_MOON_KM3_S2 / constants.MU_EARTH_KM3_S2,
                    constants.MU_SUN_KM3_S2 / constants.MU_EARTH_KM3_S2,
                ]
            )
            w_moon = np.array([1.0, 0.0])
            w_sun = np.array([0.0, 1.0])
        else:
            mu = np.zeros(0)
            w_moon = np.zeros(0)
            w_sun = np.zeros(0)
        event_w_moon, event_w_sun = 0.0, 0.0
    else:
        raise ValueError(f"unsupported arc center {center}")
    params = backend.ArcParams(
        direction=float(direction),
        anchor_epoch_s=anchor_epoch_s,
        tu_s=scale.tu_s,
        du_km=scale.du_km,
        ut_max_km_s2=propulsion.ut_max_km_s2,
        c_km_s=propulsion.c_km_s,
        tau_fin_s=tau_fin_s,
        tau_offset_s=tau_offset_s,
        thrust_on=thrust_on,
        forward_mass=forward_mass,
        eph=_eph_pack(backend, eph),
        tilt=tilt,
        pert_mu=mu,
        pert_w_moon=w_moon,
        pert_w_sun=w_sun,
        fd_step=cfg.fd_step,
        frozen=frozen,
        event_threshold_canon=(
            constants.SWITCH_RADIUS_KM / scale.du_km if event_on else -1.0
        ),
        event_w_moon=event_w_moon if event_on else 0.0,
        event_w_sun=event_w_sun if event_on else 0.0,
    )
    return params, scale


def _raise_for_status(status: int, where: str) -> None:
    if status in (_pycore.STATUS_OK, _pycore.STATUS_EVENT):
        return
    message = _STATUS_MESSAGES.get(status, f"status {status}")
    if status == _pycore.STATUS_EXHAUSTED:
        raise PropellantExhaustedError(f"{where}: {message}")
    raise PropagationError(f"{where}: {message}")


def _hermite_state(raw, k: int, theta: float) -> np.ndarray:
    h = raw.taus[k + 1] - raw.taus[k]
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2.0 * t3 - 3.0 * t2 + 1.0) * raw.states[k]
        + (t3 - 2.0 * t2 + theta) * h * raw.derivs[k]
        + (-2.0 * t3 + 3.0 * t2) * raw.states[k + 1]
        + (t3 - t2) * h * raw.derivs[k + 1]
    )


def _refine_event(backend, raw, params) -> tuple[float, np.ndarray]:
    """Bisection on the dense interpolant of the bracketing step."""
    k = len(raw.taus) - 2
    lo, hi = 0.0, 1.0
    g_lo = backend.event_value(raw.taus[k], raw.states[k], params)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        tau_mid = raw.taus[k] + mid * (raw.taus[k + 1] - raw.taus[k])
        y_mid = _hermite_state(raw, k, mid)
        g_mid = backend.event_value(tau_mid, y_mid, params)
        if abs(g_mid) < 1e-9:
            return tau_mid, y_mid
        if (g_lo > 0.0) == (g_mid > 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    tau_mid = raw.taus[k] + 0.5 * (lo + hi) * (raw.taus[k + 1] - raw.taus[k])
    return tau_mid, _hermite_state(raw, k, 0.5 * (lo + hi))


def _assemble(
    direction: int,
    anchor_epoch_s: float,
    pieces: list[tuple],
    scales: dict[int, CanonicalScale],
    transition: TransitionRecord | None,
    n_rhs: int,
) -> Trajectory:
    taus = []
    epochs = []
    states = []
    derivs = []
    controls = []
    splits = []
    hams = []
    mrs = []
    arcs = []
    for arc_id, tau_offset_s, arc_anchor_s, scale, raw, upto in pieces:
        count = upto if upto is not None else len(raw.taus)
        for i in range(count):
            tau_s = tau_offset_s + raw.taus[i] * scale.tu_s
            taus.append(tau_s)
            epochs.append(arc_anchor_s + direction * raw.taus[i] * scale.tu_s)
            states.append(raw.states[i])
            derivs.append(raw.derivs[i])
            controls.append(raw.controls[i])
            splits.append(raw.splits[i])
            hams.append(raw.hamiltonians[i])
            mrs.append(raw.mass_ratios[i])
            arcs.append(arc_id)
    return Trajectory(
        direction=direction,
        anchor_epoch_s=anchor_epoch_s,
        tau_s=np.array(taus),
        epoch_s=np.array(epochs),
        states=np.array(states),
        derivs=np.array(derivs),
        controls=np.array(controls),
        splits=np.array(splits),
        hamiltonians=np.array(hams),
        mass_ratios=np.array(mrs),
        arc_ids=np.array(arcs, dtype=int),
        scales=scales,
        transition=transition,
        n_rhs=n_rhs,
    )


def propagate_single_arc(
    y0: np.ndarray,
    center: BodyId,
    direction: int,
    anchor_epoch_s: float,
    tau_fin_s: float,
    propulsion: Propulsion,
    eph: Ephemeris,
    cfg: PropagationConfig | None = None,
    thrust_on: bool = True,
    perturbations_on: bool = True,
    frozen: bool = False,
    backend_name: str | None = None,
) -> Trajectory:
    """Propagate one leg in a fixed central-body representation.

    Args:
        y0: initial 12-vector (elements and adjoints), canonical units of
            the chosen center.
        center: MOON or EARTH.
        direction: +1 sweeps calendar time forward from the anchor, -1
            backward.
        anchor_epoch_s: calendar epoch of tau = 0.
        tau_fin_s: leg duration in seconds.

    Raises:
        PropagationError: on integrator failure or propellant exhaustion.
    """
    cfg = cfg or PropagationConfig()
    backend = backend_module(backend_name)
    params, scale = _arc_params(
        backend,
        center,
        direction,
        anchor_epoch_s,
        tau_fin_s,
        0.0,
        propulsion,
        eph,
        cfg,
        thrust_on,
        perturbations_on,
        event_on=False,
        frozen=frozen,
        forward_mass=direction > 0,
    )
    raw = backend.propagate_raw(
        np.asarray(y0, dtype=float),
        tau_fin_s / scale.tu_s,
        params,
        cfg.rtol,
        cfg.atol,
        cfg.max_step_s / scale.tu_s,
        cfg.max_steps,
    )
    _raise_for_status(raw.status, "single arc")
    return _assemble(
        direction,
        anchor_epoch_s,
        [(0, 0.0, anchor_epoch_s, scale, raw, None)],
        {0: scale},
        None,
        raw.n_rhs,
    )


def propagate_two_arc(
    y0: np.ndarray,
    direction: int,
    anchor_epoch_s: float,
    tau_fin_s: float,
    propulsion: Propulsion,
    eph: Ephemeris,
    cfg: PropagationConfig | None = None,
    thrust_on: bool = True,
    backend_name: str | None = None,
) -> Trajectory:
    """Gateway-anchored leg that must cross the attractor switching sphere.

    Integrates Moon-centered until the geocentric distance falls through
    the switching radius, rebuilds state and adjoints around the Earth, and
    finishes Earth-centered. The hand-off epoch, Jacobian, and Hamiltonian
    continuity are recorded on the returned trajectory.

    Raises:
        NoTransitionError: if the sphere is never crossed within the leg.
        PropagationError: on integrator failure or propellant exhaustion.
    """
    cfg = cfg or PropagationConfig()
    backend = backend_module(backend_name)
    lunar = lunar_canonical()
    earth = earth_canonical()
    params1, _ = _arc_params(
        backend,
        BodyId.MOON,
        direction,
        anchor_epoch_s,
        tau_fin_s,
        0.0,
        propulsion,
        eph,
        cfg,
        thrust_on=thrust_on,
        perturbations_on=True,
        event_on=True,
        frozen=False,
        forward_mass=direction > 0,
    )
    raw1 = backend.propagate_raw(
        np.asarray(y0, dtype=float),
        tau_fin_s / lunar.tu_s,
        params1,
        cfg.rtol,
        cfg.atol,
        cfg.max_step_s / lunar.tu_s,
        cfg.max_steps,
    )
    if raw1.status != _pycore.STATUS_EVENT:
        _raise_for_status(raw1.status, "lunar arc")
        raise NoTransitionError(
            f"no switching-sphere crossing within {tau_fin_s:.0f} s"
        )
    tau_cross_hat, y_cross = _refine_event(backend, raw1, params1)
    tau_cross_s = tau_cross_hat * lunar.tu_s
    epoch_cross = anchor_epoch_s + direction * tau_cross_s

    z_before = y_cross[:6]
    lam_before = y_cross[6:12]
    jac = transition_jacobian(z_before, epoch_cross, eph, lunar, earth)
    z_after = chain_state(z_before, epoch_cross, eph, lunar, earth)
    lam_after = chain_costate(lam_before, jac)

    _, _, _, h_before, _ = backend.node_outputs(tau_cross_hat, y_cross, params1)

    params2, _ = _arc_params(
        backend,
        BodyId.EARTH,
        direction,
        epoch_cross,
        tau_fin_s,
        tau_cross_s,
        propulsion,
        eph,
        cfg,
        thrust_on=thrust_on,
        perturbations_on=True,
        event_on=False,
        frozen=False,
        forward_mass=direction > 0,
    )
    y0_earth = np.concatenate([z_after, lam_after])
    raw2 = backend.propagate_raw(
        y0_earth,
        (tau_fin_s - tau_cross_s) / earth.tu_s,
        params2,
        cfg.rtol,
        cfg.atol,
        cfg.max_step_s / earth.tu_s,
        cfg.max_steps,
    )
    _raise_for_status(raw2.status, "terrestrial arc")
    h_after = float(raw2.hamiltonians[0])

    radius_residual = (
        earth_distance_km(z_before, epoch_cross, eph, lunar)
        - constants.SWITCH_RADIUS_KM
    )
    t_partial = transform_time_partial(z_before, epoch_cross, eph, lunar, earth)
    transition = TransitionRecord(
        epoch_s=epoch_cross,
        z_before=z_before.copy(),
        z_after=z_after.copy(),
        lam_before=lam_before.copy(),
        lam_after=lam_after.copy(),
        jacobian=jac,
        radius_residual_km=radius_residual,
        hamiltonian_before_per_s=h_before / lunar.tu_s,
        hamiltonian_after_per_s=h_after / earth.tu_s,
        translation_rate_per_s=float(direction * (lam_after @ t_partial)),
    )

    # Arc one contributes its nodes up to the bracket, then the refined
    # crossing node replaces the overshoot.
    refined = _refined_raw(backend, raw1, params1, tau_cross_hat, y_cross)
    pieces = [
        (0, 0.0, anchor_epoch_s, lunar, refined, None),
        (1, tau_cross_s, epoch_cross, earth, raw2, None),
    ]
    return _assemble(
        direction,
        anchor_epoch_s,
        pieces,
        {0: lunar, 1: earth},
        transition,
        raw1.n_rhs + raw2.n_rhs,
    )


def _refined_raw(backend, raw, params, tau_cross_hat: float, y_cross: np.ndarray):
    """Replace the post-crossing node with the refined crossing point."""
    split, alpha, beta, h_star, m_ratio = backend.node_outputs(
        tau_cross_hat, y_cross, params
    )
    f_cross = backend.rhs(tau_cross_hat, y_cross, params)
    n_keep = len(raw.taus) - 1
    out = _pycore.RawArc(
        taus=np.append(raw.taus[:n_keep], tau_cross_hat),
        states=np.vstack([raw.states[:n_keep], y_cross]),
        derivs=np.vstack([raw.derivs[:n_keep], f_cross]),
        controls=np.vstack([raw.controls[:n_keep], [alpha, beta]]),
        splits=np.vstack(
            [raw.splits[:n_keep], [split.h_free, split.h_r, split.h_t, split.h_h]]
        ),
        hamiltonians=np.append(raw.hamiltonians[:n_keep], h_star),
        mass_ratios=np.append(raw.mass_ratios[:n_keep], m_ratio),
        status=raw.status,
        n_rhs=raw.n_rhs,
    )
    return out

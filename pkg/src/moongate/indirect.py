"""Necessary conditions of the minimum-time low-thrust problem.

The Hamiltonian is split into a thrust-free part and the three coefficients
multiplying the LVLH thrust components. The minimizing thrust direction
follows from those coefficients in closed form; adjoint rates come from
central differences of the control-law-composed Hamiltonian, which is exact
to differencing order because the law makes the control variation vanish.

Backward legs sweep time from the arrival epoch; their vector field is the
negated forward field, so every quantity here takes a direction sign that
folds that reversal into the split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import gauss_matrix, gauss_rates, perturbing_accel_lvlh
from .mee import MeeState


@dataclass(frozen=True)
class HamiltonianSplit:
    """Thrust-free term and LVLH thrust coefficients, direction-folded."""

    h_free: float
    h_r: float
    h_t: float
    h_h: float

    @property
    def switch_magnitude(self) -> float:
        """Norm of the thrust coefficients; zero only on the singular set."""
        return math.sqrt(self.h_r**2 + self.h_t**2 + self.h_h**2)


def hamiltonian_split(
    z: np.ndarray,
    lam: np.ndarray,
    a_pert_lvlh: np.ndarray,
    direction_sign: float = 1.0,
) -> HamiltonianSplit:
    """Evaluate the Hamiltonian decomposition at one point.

    Args:
        z: equinoctial state, canonical units.
        lam: adjoint vector.
        a_pert_lvlh: perturbing acceleration on LVLH axes.
        direction_sign: +1 for forward sweeps, -1 for backward.

    Returns:
        The split with the sweep direction folded in.
    """
    g = gauss_matrix(z)
    coeff = lam @ g
    h_free = float(lam @ gauss_rates(z, a_pert_lvlh))
    return HamiltonianSplit(
        h_free=direction_sign * h_free,
        h_r=direction_sign * float(coeff[0]),
        h_t=direction_sign * float(coeff[1]),
        h_h=direction_sign * float(coeff[2]),
    )


def optimal_controls(split: HamiltonianSplit) -> tuple[float, float]:
    """Thrust angles minimizing the Hamiltonian.

    Returns:
        (alpha, beta): in-plane angle from the transversal axis and
        out-of-plane elevation, with cos(beta) >= 0.

    Raises:
        ValueError: on the singular set where all three coefficients vanish.
    """
    in_plane = math.hypot(split.h_r, split.h_t)
    if in_plane == 0.0 and split.h_h == 0.0:
        raise ValueError("thrust direction undefined: all coefficients zero")
    alpha = math.atan2(-split.h_r, -split.h_t)
    beta = math.atan2(-split.h_h, in_plane)
    return alpha, beta


def hamiltonian_value(split: HamiltonianSplit, a_thrust_mag: float) -> float:
    """Hamiltonian with the minimizing thrust direction substituted."""
    return split.h_free - a_thrust_mag * split.switch_magnitude


def composed_hamiltonian(
    z: np.ndarray,
    lam: np.ndarray,
    bodies: list[tuple[float, np.ndarray]],
    a_thrust_mag: float,
    direction_sign: float,
) -> float:
    """Optimal-control Hamiltonian as a function of the state alone.

    Ephemeris positions and the thrust magnitude are held by the caller, so
    this is exactly the function whose state gradient drives the adjoints.
    """
    a_pert = perturbing_accel_lvlh(z, bodies)
    split = hamiltonian_split(z, lam, a_pert, direction_sign)
    return hamiltonian_value(split, a_thrust_mag)


FD_STEP = 1e-7


def costate_rates(
    z: np.ndarray,
    lam: np.ndarray,
    bodies: list[tuple[float, np.ndarray]],
    a_thrust_mag: float,
    direction_sign: float,
    fd_step: float = FD_STEP,
) -> np.ndarray:
    """Adjoint rates -dH/dx by Richardson-extrapolated central differences.

    The step is absolute in canonical units; one halving step of Richardson
    removes the leading quadratic truncation term.
    """
    grad = np.empty(6)
    work = z.astype(float).copy()
    for i in range(6):
        base = work[i]
        h = fd_step
        work[i] = base + h
        f_ph = composed_hamiltonian(work, lam, bodies, a_thrust_mag, direction_sign)
        work[i] = base - h
        f_mh = composed_hamiltonian(work, lam, bodies, a_thrust_mag, direction_sign)
        work[i] = base + 0.5 * h
        f_ph2 = composed_hamiltonian(work, lam, bodies, a_thrust_mag, direction_sign)
        work[i] = base - 0.5 * h
        f_mh2 = composed_hamiltonian(work, lam, bodies, a_thrust_mag, direction_sign)
        work[i] = base
        d_full = (f_ph - f_mh) / (2.0 * h)
        d_half = (f_ph2 - f_mh2) / h
        grad[i] = (4.0 * d_half - d_full) / 3.0
    return -grad


@dataclass(frozen=True)
class TerminalTargets:
    """Arrival orbit: semilatus rectum, eccentricity, inclination.

    The residuals constrain the element moduli, leaving node, periapsis and
    phase free, which is the natural closure for a circular arrival orbit.
    """

    p: float
    e: float
    i_rad: float

    def __post_init__(self) -> None:
        if self.p <= 0.0:
            raise ValueError(f"target semilatus rectum must be positive, got {self.p}")
        if not 0.0 <= self.e < 1.0:
            raise ValueError(f"target eccentricity must lie in [0, 1), got {self.e}")
        if not 0.0 <= self.i_rad < math.pi:
            raise ValueError(f"target inclination must lie in [0, pi), got {self.i_rad}")


def terminal_residuals(
    z_fin: np.ndarray, lam_fin: np.ndarray, targets: TerminalTargets
) -> np.ndarray:
    """Arrival-condition residuals: three state moduli, three adjoint
    orthogonality conditions for the free angles."""
    p, l, m, n, s = z_fin[0], z_fin[1], z_fin[2], z_fin[3], z_fin[4]
    tan_half = math.tan(0.5 * targets.i_rad)
    return np.array(
        [
            p - targets.p,
            l * l + m * m - targets.e**2,
            n * n + s * s - tan_half**2,
            lam_fin[1] * m - lam_fin[2] * l,
            lam_fin[3] * s - lam_fin[4] * n,
            lam_fin[5],
        ]
    )


def final_hamiltonian_accepts(h_final: float) -> bool:
    """Free-time transversality: the arrival Hamiltonian must be negative."""
    return h_final < 0.0


@dataclass(frozen=True)
class PontryaginReport:
    """Departure-point optimality diagnostic.

    margin: norm of the thrust coefficients at tau = 0; a positive value
        certifies the strict Hamiltonian inequality at the anchored end.
    identity_lhs: adjoint pairing with the natural drift of the anchor orbit.
    identity_rhs: thrust-free Hamiltonian term at tau = 0 (forward sense).
    """

    margin: float
    identity_lhs: float
    identity_rhs: float

    @property
    def identity_residual(self) -> float:
        return self.identity_lhs - self.identity_rhs

    @property
    def satisfied(self) -> bool:
        return self.margin >= 0.0


def pontryagin_report(
    split0: HamiltonianSplit,
    lam0: np.ndarray,
    anchor_rate: np.ndarray,
    direction_sign: float,
) -> PontryaginReport:
    """Diagnostic at the anchored departure point.

    Args:
        split0: Hamiltonian split at tau = 0 (already direction-folded).
        lam0: adjoint vector at tau = 0.
        anchor_rate: natural element rates of the anchor orbit in actual
            time, canonical units.
        direction_sign: sweep direction of the leg.
    """
    return PontryaginReport(
        margin=split0.switch_magnitude,
        identity_lhs=float(lam0 @ anchor_rate),
        identity_rhs=direction_sign * split0.h_free,
    )


def epoch_residual(
    h_initial: float,
    h_final: float,
    lam0: np.ndarray,
    anchor_rate: np.ndarray,
    direction_sign: float,
) -> float:
    """Stationarity of the transfer with respect to the anchor epoch.

    Along an extremal the Hamiltonian change over the leg equals the
    integrated explicit time dependence, which turns the epoch condition
    into endpoint values plus the adjoint pairing with the anchor drift.
    """
    return direction_sign * (h_final - h_initial) + float(lam0 @ anchor_rate)


def unknown_scale_bounds() -> tuple[np.ndarray, np.ndarray]:
    """Box for the six adjoint components; the set is closed under positive
    scaling, so a unit box loses no extremals."""
    return -np.ones(6), np.ones(6)


def mee_state_rates(
    z: np.ndarray,
    a_pert_lvlh: np.ndarray,
    a_thrust_lvlh: np.ndarray,
    direction_sign: float,
) -> np.ndarray:
    """Swept-time state rates including the direction fold."""
    total = np.asarray(a_pert_lvlh, dtype=float) + np.asarray(
        a_thrust_lvlh, dtype=float
    )
    return direction_sign * gauss_rates(z, total)


def state_from_vector(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split the 12-vector into elements and adjoints."""
    return y[:6], y[6:12]


def mee_of(y: np.ndarray) -> MeeState:
    return MeeState.from_array(y[:6])

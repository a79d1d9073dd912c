"""Global search for minimum-time transfer extremals.

One leg is parametrized by eight unknowns: the station-anchor epoch inside
the departure window, the leg duration, and the six adjoints at the anchor.
The fitness of a candidate is the weighted root-sum-square of the terminal
residuals after propagating the candidate extremal; a differential-evolution
sweep locates the basin and a bounded simplex polish finishes it. Candidates
whose propagation fails, exhausts the propellant, never reaches the
switching sphere, or arrives with a non-negative Hamiltonian receive a flat
penalty instead of a residual norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import constants
from .ephemeris import Ephemeris, bundled_ephemeris, gateway_mee
from .epochs import seconds_past_j2000_to_utc, utc_to_seconds_past_j2000
from .errors import NoTransitionError, PropagationError, SingularStateError
from .frames import BodyId, earth_canonical, lunar_canonical
from .indirect import (
    TerminalTargets,
    epoch_residual,
    final_hamiltonian_accepts,
    terminal_residuals,
)
from .mee import wrap_angle
from .propagation import (
    PropagationConfig,
    Propulsion,
    Trajectory,
    propagate_single_arc,
    propagate_two_arc,
)

PENALTY = 1.0e6

# Weights of the terminal residuals in the fitness norm; the eccentricity
# modulus enters quadratically in the elements, so it carries extra weight.
RESIDUAL_WEIGHTS = (1.0, 100.0, 1.0, 1.0, 1.0, 1.0)

# Integrator settings for the global sweep: a step cap turns candidates that
# dive toward the attractor (hundreds of thousands of tiny steps) into flat
# penalties instead of minute-long integrations, and the tolerance is one
# decade looser than the reporting one. Converged points are always
# re-propagated with REPORT_CONFIG before being recorded.
SEARCH_CONFIG = PropagationConfig(rtol=1e-8, atol=1e-10, max_steps=150_000)
REPORT_CONFIG = PropagationConfig(rtol=1e-9, atol=1e-11)

#: Finite-difference half-step for the anchor-orbit drift rate, seconds.
ANCHOR_RATE_STEP_S = 32.0


@dataclass(frozen=True)
class TransferScenario:
    """One station-anchored transfer problem.

    direction +1 departs the station (forward sweep), -1 arrives at it
    (backward sweep); two_arc legs must cross the attractor switching
    sphere. Targets are canonical in the terminal arc's system. epoch_weight
    re-enables the anchor-epoch stationarity residual in the fitness; it is
    off by default because the epoch is already a search unknown.
    """

    scenario_id: str
    direction: int
    two_arc: bool
    targets: TerminalTargets
    window_utc: tuple[str, str]
    tof_days: tuple[float, float]
    epoch_weight: float = 0.0

    def __post_init__(self) -> None:
        if self.direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {self.direction}")
        if not self.tof_days[0] < self.tof_days[1]:
            raise ValueError("duration window must have positive length")

    @property
    def window_s(self) -> tuple[float, float]:
        return (
            utc_to_seconds_past_j2000(self.window_utc[0]),
            utc_to_seconds_past_j2000(self.window_utc[1]),
        )

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Search box: epoch offset (days), duration (days), six adjoints."""
        w0, w1 = self.window_s
        window_days = (w1 - w0) / 86400.0
        lo = np.concatenate([[0.0, self.tof_days[0]], -np.ones(6)])
        hi = np.concatenate([[window_days, self.tof_days[1]], np.ones(6)])
        return lo, hi


def _llo_targets() -> TerminalTargets:
    return TerminalTargets(
        p=constants.LLO_TARGET["p_km"] / lunar_canonical().du_km,
        e=constants.LLO_TARGET["e"],
        i_rad=math.radians(constants.LLO_TARGET["i_deg"]),
    )


def _leo_targets() -> TerminalTargets:
    return TerminalTargets(
        p=constants.LEO_TARGET["p_km"] / earth_canonical().du_km,
        e=constants.LEO_TARGET["e"],
        i_rad=math.radians(constants.LEO_TARGET["i_deg"]),
    )


def named_scenario(scenario_id: str) -> TransferScenario:
    """The four flight cases by identifier."""
    window = constants.GATEWAY_WINDOW_UTC
    if scenario_id == "gateway-to-llo":
        return TransferScenario(
            scenario_id, 1, False, _llo_targets(), window, constants.LLO_TOF_WINDOW_DAYS
        )
    if scenario_id == "llo-to-gateway":
        return TransferScenario(
            scenario_id, -1, False, _llo_targets(), window, constants.LLO_TOF_WINDOW_DAYS
        )
    if scenario_id == "gateway-to-leo":
        return TransferScenario(
            scenario_id, 1, True, _leo_targets(), window, constants.LEO_TOF_WINDOW_DAYS
        )
    if scenario_id == "leo-to-gateway":
        return TransferScenario(
            scenario_id, -1, True, _leo_targets(), window, constants.LEO_TOF_WINDOW_DAYS
        )
    raise ValueError(f"unknown scenario {scenario_id!r}")


SCENARIO_IDS = (
    "gateway-to-llo",
    "llo-to-gateway",
    "gateway-to-leo",
    "leo-to-gateway",
)


@dataclass(frozen=True)
class FitnessEval:
    """One fitness evaluation, with the pieces kept for reporting."""

    j_tilde: float
    y: np.ndarray
    penalty_reason: str | None = None
    trajectory: Trajectory | None = None


def anchor_drift_rate(eph: Ephemeris, epoch_s: float) -> np.ndarray:
    """Element rates of the station orbit, lunar canonical per second."""
    scale = lunar_canonical()
    h = ANCHOR_RATE_STEP_S
    z_p = gateway_mee(eph, epoch_s + h, scale.du_km, scale.vu_km_s).as_array()
    z_m = gateway_mee(eph, epoch_s - h, scale.du_km, scale.vu_km_s).as_array()
    d = (z_p - z_m) / (2.0 * h)
    d[5] = wrap_angle(z_p[5] - z_m[5]) / (2.0 * h)
    return d


def _weights(scenario: TransferScenario) -> np.ndarray:
    return np.concatenate([RESIDUAL_WEIGHTS, [scenario.epoch_weight]])


def evaluate_fitness(
    x: np.ndarray,
    scenario: TransferScenario,
    eph: Ephemeris,
    cfg: PropagationConfig | None = None,
    propulsion: Propulsion | None = None,
    full: bool = False,
) -> float | FitnessEval:
    """Residual norm of one candidate unknown vector.

    x holds (epoch offset from window start in days, duration in days, six
    anchor adjoints). With full=True the residual vector, penalty reason and
    trajectory come back too.
    """
    x = np.asarray(x, dtype=float)
    scale = lunar_canonical()
    w0, _ = scenario.window_s
    epoch_s = w0 + float(x[0]) * 86400.0
    tau_fin_s = float(x[1]) * 86400.0
    lam0 = x[2:8].copy()
    propulsion = propulsion or Propulsion()

    def bail(reason: str) -> float | FitnessEval:
        if full:
            return FitnessEval(PENALTY, np.full(7, np.nan), reason, None)
        return PENALTY

    try:
        z0 = gateway_mee(eph, epoch_s, scale.du_km, scale.vu_km_s).as_array()
        y0 = np.concatenate([z0, lam0])
        if scenario.two_arc:
            traj = propagate_two_arc(
                y0, scenario.direction, epoch_s, tau_fin_s, propulsion, eph, cfg
            )
        else:
            traj = propagate_single_arc(
                y0,
                BodyId.MOON,
                scenario.direction,
                epoch_s,
                tau_fin_s,
                propulsion,
                eph,
                cfg,
            )
    except NoTransitionError:
        return bail("switching sphere never crossed")
    except PropagationError as exc:
        return bail(str(exc))
    except SingularStateError as exc:
        return bail(str(exc))

    z_fin = traj.final_state
    lam_fin = traj.final_costate
    h_fin = traj.final_hamiltonian
    if not (np.all(np.isfinite(z_fin)) and np.all(np.isfinite(lam_fin)) and math.isfinite(h_fin)):
        return bail("non-finite terminal point")
    if not final_hamiltonian_accepts(h_fin):
        return bail("non-negative arrival Hamiltonian")

    y = np.empty(7)
    y[:6] = terminal_residuals(z_fin, lam_fin, scenario.targets)
    h_per_s = traj.hamiltonians_per_s()
    y[6] = scale.tu_s * epoch_residual(
        float(h_per_s[0]),
        float(h_per_s[-1]),
        lam0,
        anchor_drift_rate(eph, epoch_s),
        float(scenario.direction),
    )
    j_tilde = float(np.sqrt(np.sum(_weights(scenario) * y * y)))
    if full:
        return FitnessEval(j_tilde, y, None, traj)
    return j_tilde


# ---------------------------------------------------------------------------
# Search drivers


@dataclass(frozen=True)
class SearchSettings:
    """Differential-evolution knobs (rand/1/bin, greedy selection)."""

    population: int = 40
    f_weight: float = 0.7
    crossover: float = 0.9
    max_generations: int = 300
    stall_generations: int = 50
    j_stop: float = 1e-6
    seed: int = 20250525
    polish_evaluations: int = 4000

    def __post_init__(self) -> None:
        if self.population < 4:
            raise ValueError("rand/1/bin needs at least four members")


@dataclass
class SearchResult:
    x: np.ndarray
    j: float
    history: np.ndarray  # best fitness after each generation
    generations: int
    n_evaluations: int
    stop_reason: str  # threshold | stall | max_generations


def differential_evolution(
    fn: Callable[[np.ndarray], float],
    lo: np.ndarray,
    hi: np.ndarray,
    settings: SearchSettings | None = None,
    progress: Callable[[int, float], None] | None = None,
    x_init: np.ndarray | None = None,
) -> SearchResult:
    """Seeded global sweep of the box [lo, hi].

    Classic rand/1/bin: each member is challenged by a trial built from
    three distinct other members, clipped to the box, mixed coordinate-wise
    with crossover probability (one coordinate always taken), and replaces
    the member only if not worse. Stops on the fitness threshold, on a run
    of generations without improvement of the best member, or on the
    generation cap. An optional incumbent replaces the first random member
    so continuation runs never start from scratch.
    """
    s = settings or SearchSettings()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dim = len(lo)
    rng = np.random.default_rng(s.seed)
    pop = lo + rng.random((s.population, dim)) * (hi - lo)
    if x_init is not None:
        pop[0] = np.clip(np.asarray(x_init, dtype=float), lo, hi)
    cost = np.array([fn(pop[i]) for i in range(s.population)])
    n_eval = s.population
    history: list[float] = []
    best = int(np.argmin(cost))
    stall = 0
    stop = "max_generations"
    gen = 0
    for gen in range(1, s.max_generations + 1):
        improved = False
        for i in range(s.population):
            r1, r2, r3 = _pick_three(rng, s.population, i)
            mutant = pop[r1] + s.f_weight * (pop[r2] - pop[r3])
            np.clip(mutant, lo, hi, out=mutant)
            cross = rng.random(dim) < s.crossover
            cross[rng.integers(dim)] = True
            trial = np.where(cross, mutant, pop[i])
            j_trial = fn(trial)
            n_eval += 1
            if j_trial <= cost[i]:
                pop[i] = trial
                if j_trial < cost[best] - 1e-15:
                    improved = True
                    best = i
                cost[i] = j_trial
        history.append(float(cost[best]))
        if progress is not None:
            progress(gen, float(cost[best]))
        if cost[best] < s.j_stop:
            stop = "threshold"
            break
        stall = 0 if improved else stall + 1
        if stall >= s.stall_generations:
            stop = "stall"
            break
    return SearchResult(
        x=pop[best].copy(),
        j=float(cost[best]),
        history=np.array(history),
        generations=gen,
        n_evaluations=n_eval,
        stop_reason=stop,
    )


def _pick_three(rng: np.random.Generator, n: int, skip: int) -> tuple[int, int, int]:
    picks: list[int] = []
    while len(picks) < 3:
        c = int(rng.integers(n))
        if c != skip and c not in picks:
            picks.append(c)
    return picks[0], picks[1], picks[2]


def simplex_refine(
    fn: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    j0: float,
    max_evaluations: int = 4000,
) -> tuple[np.ndarray, float, int]:
    """Bounded Nelder-Mead polish; never returns a worse point than x0."""
    res = minimize(
        fn,
        x0,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options={
            "maxfev": max_evaluations,
            "xatol": 1e-12,
            "fatol": 1e-14,
        },
    )
    if res.fun < j0:
        return np.asarray(res.x, dtype=float), float(res.fun), int(res.nfev)
    return np.asarray(x0, dtype=float), float(j0), int(res.nfev)


# ---------------------------------------------------------------------------
# Scenario solves and their records


@dataclass
class SolutionRecord:
    """Frozen outcome of one scenario solve.

    x is the unknown vector (epoch offset days, duration days, adjoints);
    t0/tf are the calendar ends of the leg in sweep order, so t0 is the
    departure orbit for backward scenarios' calendar-earliest end.
    """

    scenario_id: str
    direction: int
    seed: int
    x: list[float]
    j_tilde: float
    y: list[float]
    anchor_epoch_utc: str
    depart_utc: str
    arrive_utc: str
    tof_s: float
    mass_ratio_final: float
    stop_reason: str
    generations: int
    n_evaluations: int
    history: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SolutionRecord":
        return cls(**json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "SolutionRecord":
        return cls.from_json(Path(path).read_text())


def _record_from_point(
    scenario: TransferScenario,
    x: np.ndarray,
    eph: Ephemeris,
    cfg: PropagationConfig | None,
    search: SearchResult,
    seed: int,
    nm_evals: int,
) -> SolutionRecord:
    out = evaluate_fitness(x, scenario, eph, cfg, full=True)
    assert isinstance(out, FitnessEval)
    w0, _ = scenario.window_s
    anchor_s = w0 + x[0] * 86400.0
    tof_s = x[1] * 86400.0
    if scenario.direction == 1:
        depart_s, arrive_s = anchor_s, anchor_s + tof_s
    else:
        depart_s, arrive_s = anchor_s - tof_s, anchor_s
    prop = Propulsion()
    mass_ratio = 1.0 - (prop.ut_max_km_s2 / prop.c_km_s) * tof_s
    return SolutionRecord(
        scenario_id=scenario.scenario_id,
        direction=scenario.direction,
        seed=seed,
        x=[float(v) for v in x],
        j_tilde=float(out.j_tilde),
        y=[float(v) for v in out.y],
        anchor_epoch_utc=seconds_past_j2000_to_utc(anchor_s),
        depart_utc=seconds_past_j2000_to_utc(depart_s),
        arrive_utc=seconds_past_j2000_to_utc(arrive_s),
        tof_s=float(tof_s),
        mass_ratio_final=float(mass_ratio),
        stop_reason=search.stop_reason,
        generations=search.generations,
        n_evaluations=search.n_evaluations + nm_evals,
        history=[float(v) for v in search.history],
    )


def solve_scenario(
    scenario: TransferScenario,
    eph: Ephemeris | None = None,
    settings: SearchSettings | None = None,
    search_cfg: PropagationConfig | None = None,
    report_cfg: PropagationConfig | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> SolutionRecord:
    """Full pipeline: global sweep, simplex polish, frozen record."""
    eph = eph or bundled_ephemeris()
    settings = settings or SearchSettings()
    search_cfg = search_cfg or SEARCH_CONFIG
    report_cfg = report_cfg or REPORT_CONFIG
    lo, hi = scenario.bounds()

    def fn(x: np.ndarray) -> float:
        return evaluate_fitness(x, scenario, eph, search_cfg)

    search = differential_evolution(fn, lo, hi, settings, progress)
    x, j, nm_evals = simplex_refine(
        fn, search.x, lo, hi, search.j, settings.polish_evaluations
    )
    search.j = j
    return _record_from_point(
        scenario, x, eph, report_cfg, search, settings.seed, nm_evals
    )


def refine_scenario(
    record: SolutionRecord,
    shrink: float = 0.15,
    eph: Ephemeris | None = None,
    settings: SearchSettings | None = None,
    search_cfg: PropagationConfig | None = None,
    report_cfg: PropagationConfig | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> SolutionRecord:
    """Continue a solve inside a shrunken box around a frozen record.

    The box is the scenario box scaled by `shrink` per coordinate and
    recentered on the record's point (clipped to the original box), and the
    record's point itself joins the starting population. Useful when a full
    sweep plateaus: the crowd re-explores the incumbent's basin at higher
    density.
    """
    if not 0.0 < shrink <= 1.0:
        raise ValueError("shrink must be in (0, 1]")
    eph = eph or bundled_ephemeris()
    settings = settings or SearchSettings()
    search_cfg = search_cfg or SEARCH_CONFIG
    report_cfg = report_cfg or REPORT_CONFIG
    scenario = named_scenario(record.scenario_id)
    lo0, hi0 = scenario.bounds()
    x0 = np.clip(np.array(record.x, dtype=float), lo0, hi0)
    half = 0.5 * shrink * (hi0 - lo0)
    lo = np.clip(x0 - half, lo0, hi0)
    hi = np.clip(x0 + half, lo0, hi0)

    def fn(x: np.ndarray) -> float:
        return evaluate_fitness(x, scenario, eph, search_cfg)

    search = differential_evolution(fn, lo, hi, settings, progress, x_init=x0)
    x, j, nm_evals = simplex_refine(
        fn, search.x, lo, hi, search.j, settings.polish_evaluations
    )
    search.j = j
    return _record_from_point(
        scenario, x, eph, report_cfg, search, settings.seed, nm_evals
    )


def reevaluate_record(
    record: SolutionRecord,
    eph: Ephemeris | None = None,
    cfg: PropagationConfig | None = None,
) -> FitnessEval:
    """Re-propagate a frozen record's unknown vector."""
    eph = eph or bundled_ephemeris()
    scenario = named_scenario(record.scenario_id)
    out = evaluate_fitness(
        np.array(record.x), scenario, eph, cfg or REPORT_CONFIG, full=True
    )
    assert isinstance(out, FitnessEval)
    return out


# ---------------------------------------------------------------------------
# Desk check: planar circular spiral with a closed-form duration


@dataclass(frozen=True)
class SpiralCase:
    """Coplanar circular-to-circular raise in the bare two-body field.

    For quasi-circular spirals the velocity increment is the difference of
    the circular speeds, and with the propellant-linear mass model the
    minimum duration follows in closed form; the global search must land
    within the quasi-circular approximation error of it.
    """

    r0: float = 1.2
    targets: TerminalTargets = field(
        default_factory=lambda: TerminalTargets(p=2.0, e=0.0, i_rad=0.0)
    )

    def delta_v(self) -> float:
        return abs(
            math.sqrt(1.0 / self.r0) - math.sqrt(1.0 / self.targets.p)
        )

    def duration_tu(self, propulsion: Propulsion | None = None) -> float:
        scale = lunar_canonical()
        prop = propulsion or Propulsion()
        u = prop.ut_max_km_s2 * scale.tu_s**2 / scale.du_km
        c = prop.c_km_s / scale.vu_km_s
        return (c / u) * (1.0 - math.exp(-self.delta_v() / c))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        mid = self.duration_tu()
        lo = np.concatenate([[0.85 * mid], -np.ones(6)])
        hi = np.concatenate([[1.15 * mid], np.ones(6)])
        return lo, hi


def spiral_fitness(
    x: np.ndarray,
    case: SpiralCase,
    cfg: PropagationConfig | None = None,
) -> float | FitnessEval:
    """Residual norm for the desk spiral; x = (duration TU, six adjoints)."""
    return _spiral_eval(x, case, cfg, full=False)


def _spiral_eval(
    x: np.ndarray,
    case: SpiralCase,
    cfg: PropagationConfig | None,
    full: bool,
) -> float | FitnessEval:
    scale = lunar_canonical()
    x = np.asarray(x, dtype=float)
    tau_fin_s = float(x[0]) * scale.tu_s
    z0 = np.array([case.r0, 0.0, 0.0, 0.0, 0.0, 0.0])
    y0 = np.concatenate([z0, x[1:7]])
    try:
        traj = propagate_single_arc(
            y0,
            BodyId.MOON,
            1,
            0.0,
            tau_fin_s,
            Propulsion(),
            Ephemeris(),
            cfg,
            perturbations_on=False,
            frozen=True,
        )
    except (PropagationError, SingularStateError):
        return PENALTY if not full else FitnessEval(PENALTY, np.full(7, np.nan), "propagation failure", None)
    if not final_hamiltonian_accepts(traj.final_hamiltonian):
        return PENALTY if not full else FitnessEval(PENALTY, np.full(7, np.nan), "non-negative arrival Hamiltonian", None)
    y = np.empty(7)
    y[:6] = terminal_residuals(traj.final_state, traj.final_costate, case.targets)
    y[6] = 0.0
    j = float(np.sqrt(np.sum(np.array(RESIDUAL_WEIGHTS) * y[:6] * y[:6])))
    if full:
        return FitnessEval(j, y, None, traj)
    return j


def solve_spiral(
    case: SpiralCase | None = None,
    settings: SearchSettings | None = None,
    cfg: PropagationConfig | None = None,
) -> tuple[SearchResult, FitnessEval]:
    """Global search of the desk spiral; returns the search and the polish."""
    case = case or SpiralCase()
    settings = settings or SearchSettings()
    lo, hi = case.bounds()

    def fn(x: np.ndarray) -> float:
        return spiral_fitness(x, case, cfg)

    search = differential_evolution(fn, lo, hi, settings)
    x, j, _ = simplex_refine(
        fn, search.x, lo, hi, search.j, settings.polish_evaluations
    )
    search.x, search.j = x, j
    out = _spiral_eval(x, case, cfg, full=True)
    assert isinstance(out, FitnessEval)
    return search, out

"""Command-line entry points.

Subcommands cover the full life of a transfer study: `solve` runs the
global search for one named case and writes the solution artifacts,
`propagate` rebuilds the trajectory tables of a saved solution, `validate`
re-propagates a saved solution and checks it against the convergence
gates, `datagen` regenerates the packaged ephemeris tables, `bench` times
the numeric cores against each other, and `info` reports what this
installation is running.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, constants
from .artifacts import (
    write_angles_csv,
    write_elements_csv,
    write_synodic_csv,
    write_trajectory_csv,
)
from .ephemeris import bundled_ephemeris
from .errors import ConfigError, MoongateError
from .frames import BodyId
from .mee import ClassicalElements, coe_to_mee
from .propagation import (
    PropagationConfig,
    Propulsion,
    active_backend,
    backend_module,
    propagate_single_arc,
)
from .solver import (
    SCENARIO_IDS,
    SearchSettings,
    SolutionRecord,
    named_scenario,
    reevaluate_record,
    refine_scenario,
    solve_scenario,
)

_CONFIG_KEYS = {
    "case": str,
    "seed": int,
    "population": int,
    "max_generations": int,
    "stall_generations": int,
    "j_stop": float,
    "polish_evaluations": int,
    "epoch_weight": float,
    "out_dir": str,
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    out = {}
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except (TypeError, ValueError):
            raise ConfigError(f"configuration key {key!r} has invalid value {value!r}")
    return out


def _write_solution_artifacts(record: SolutionRecord, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    eph = bundled_ephemeris()
    result = reevaluate_record(record, eph)
    paths = []
    sol = out_dir / "solution.json"
    record.save(sol)
    paths.append(sol)
    traj = result.trajectory
    if traj is not None:
        for name, write in (
            ("trajectory.csv", lambda p: write_trajectory_csv(p, traj)),
            ("elements.csv", lambda p: write_elements_csv(p, traj)),
            ("angles.csv", lambda p: write_angles_csv(p, traj)),
            ("synodic.csv", lambda p: write_synodic_csv(p, traj, eph)),
        ):
            target = out_dir / name
            write(target)
            paths.append(target)
    return paths


def _cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    case = args.case or cfg.get("case")
    if case is None:
        print("error: no case given (use --case or a config file)", file=sys.stderr)
        return 2
    scenario = named_scenario(case)
    if "epoch_weight" in cfg:
        scenario = dataclasses.replace(scenario, epoch_weight=cfg["epoch_weight"])
    settings = SearchSettings(
        population=args.population or cfg.get("population", 40),
        max_generations=args.generations or cfg.get("max_generations", 300),
        stall_generations=args.stall or cfg.get("stall_generations", 50),
        j_stop=args.j_stop or cfg.get("j_stop", 1e-6),
        seed=args.seed if args.seed is not None else cfg.get("seed", 20250525),
        polish_evaluations=args.polish or cfg.get("polish_evaluations", 4000),
    )
    out_dir = Path(args.out or cfg.get("out_dir", f"out-{case}"))

    def progress(gen: int, best: float) -> None:
        if not args.quiet:
            print(f"generation {gen:4d}  best {best:.6e}", flush=True)

    t0 = time.time()
    record = solve_scenario(scenario, settings=settings, progress=progress)
    paths = _write_solution_artifacts(record, out_dir)
    print(f"case {case}: J = {record.j_tilde:.6e} after {record.generations} "
          f"generations ({record.stop_reason}), {time.time() - t0:.0f} s")
    print(f"depart {record.depart_utc}  arrive {record.arrive_utc}  "
          f"duration {record.tof_s / 86400.0:.4f} d  "
          f"final mass ratio {record.mass_ratio_final:.6f}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_refine(args) -> int:
    record = SolutionRecord.load(args.solution)
    settings = SearchSettings(
        population=args.population or 40,
        max_generations=args.generations or 300,
        stall_generations=args.stall or 50,
        j_stop=args.j_stop or 1e-6,
        seed=args.seed if args.seed is not None else record.seed + 1,
        polish_evaluations=args.polish or 4000,
    )
    out_dir = Path(args.out or Path(args.solution).parent)

    def progress(gen: int, best: float) -> None:
        if not args.quiet:
            print(f"generation {gen:4d}  best {best:.6e}", flush=True)

    t0 = time.time()
    refined = refine_scenario(
        record, shrink=args.shrink, settings=settings, progress=progress
    )
    if refined.j_tilde >= record.j_tilde:
        print(f"no improvement (J = {record.j_tilde:.6e}); keeping the original")
        return 0
    paths = _write_solution_artifacts(refined, out_dir)
    print(f"case {refined.scenario_id}: J = {refined.j_tilde:.6e} "
          f"(was {record.j_tilde:.6e}), {time.time() - t0:.0f} s")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_propagate(args) -> int:
    record = SolutionRecord.load(args.solution)
    out_dir = Path(args.out or Path(args.solution).parent)
    paths = _write_solution_artifacts(record, out_dir)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_validate(args) -> int:
    record = SolutionRecord.load(args.solution)
    result = reevaluate_record(record)
    checks: list[tuple[str, bool, str]] = []

    ok = result.penalty_reason is None
    checks.append(("propagation", ok, result.penalty_reason or "clean"))
    checks.append(
        (
            "residual-norm",
            result.j_tilde <= args.j_max,
            f"J = {result.j_tilde:.6e} (gate {args.j_max:g})",
        )
    )
    mr = record.mass_ratio_final
    checks.append(("mass-ratio", 0.0 < mr < 1.0, f"{mr:.6f}"))
    traj = result.trajectory
    if traj is not None and traj.transition is not None:
        mism = traj.transition.hamiltonian_mismatch
        checks.append(
            (
                "junction-energy",
                mism <= args.mismatch_max,
                f"mismatch = {mism:.3e} (gate {args.mismatch_max:g})",
            )
        )
    if traj is not None:
        h_fin = traj.final_hamiltonian
        checks.append(("arrival-hamiltonian", h_fin < 0.0, f"{h_fin:.6e}"))
    all_ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        all_ok &= passed
    print("OK" if all_ok else "FAILED")
    return 0 if all_ok else 1


def _cmd_datagen(args) -> int:
    from .datagen import write_bundled_tables

    t0 = time.time()
    moon_path, gateway_path = write_bundled_tables(args.out)
    print(f"wrote {moon_path}")
    print(f"wrote {gateway_path}")
    print(f"{time.time() - t0:.1f} s")
    return 0


def _bench_initial() -> np.ndarray:
    coe = ClassicalElements(
        a=2.0, e=0.05, i_rad=math.radians(40.0), raan_rad=0.3, argp_rad=-0.7, ta_rad=1.1
    )
    lam = np.array([0.2, -0.1, 0.15, 0.05, -0.2, 0.1])
    return np.concatenate([coe_to_mee(coe).as_array(), lam])


def _cmd_bench(args) -> int:
    eph = bundled_ephemeris()
    anchor = constants.GATEWAY_ANCHOR_UTC
    from .epochs import utc_to_seconds_past_j2000

    anchor_s = utc_to_seconds_past_j2000(anchor)
    y0 = _bench_initial()
    cfg = PropagationConfig()
    names = []
    try:
        backend_module("compiled")
        names.append("compiled")
    except ValueError:
        print("compiled core is not built; timing the pure core only")
    names.append("python")
    rows = []
    for name in names:
        best = math.inf
        n_rhs = 0
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            traj = propagate_single_arc(
                y0,
                BodyId.MOON,
                1,
                anchor_s,
                args.days * 86400.0,
                Propulsion(),
                eph,
                cfg,
                backend_name=name,
            )
            best = min(best, time.perf_counter() - t0)
            n_rhs = traj.n_rhs
        rows.append((name, best, n_rhs))
        print(f"{name:>9}: {best * 1e3:9.1f} ms  ({n_rhs} derivative calls)")
    if len(rows) == 2:
        print(f"speedup: {rows[1][1] / rows[0][1]:.1f}x")
    return 0


def _cmd_info(args) -> int:
    print(f"version {__version__}")
    print(f"numeric core: {active_backend()}")
    try:
        eph = bundled_ephemeris()
        m0, m1 = eph.moon_table.span_s
        g0, g1 = eph.gateway_table.span_s
        from .epochs import seconds_past_j2000_to_utc as utc

        print(f"moon table: {utc(m0)} .. {utc(m1)}")
        print(f"gateway table: {utc(g0)} .. {utc(g1)}")
    except MoongateError as exc:
        print(f"bundled tables unavailable: {exc}")
    print(f"cases: {', '.join(SCENARIO_IDS)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moongate",
        description="Minimum-time low-thrust transfers between the lunar "
        "Gateway orbit, low lunar orbits, and low Earth orbits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the global search for one case")
    p.add_argument("--case", choices=SCENARIO_IDS)
    p.add_argument("--config", help="JSON file with search settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="artifact directory (default out-<case>)")
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--stall", type=int)
    p.add_argument("--j-stop", type=float, dest="j_stop")
    p.add_argument("--polish", type=int, help="simplex polish evaluation budget")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser(
        "refine", help="continue a solve in a shrunken box around a saved solution"
    )
    p.add_argument("--solution", required=True, help="path to solution.json")
    p.add_argument("--shrink", type=float, default=0.15)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="artifact directory (default beside the solution)")
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--stall", type=int)
    p.add_argument("--j-stop", type=float, dest="j_stop")
    p.add_argument("--polish", type=int, help="simplex polish evaluation budget")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("propagate", help="rebuild the tables of a saved solution")
    p.add_argument("--solution", required=True, help="path to solution.json")
    p.add_argument("--out", help="artifact directory (default beside the solution)")
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("validate", help="re-propagate a saved solution and gate it")
    p.add_argument("--solution", required=True, help="path to solution.json")
    p.add_argument("--j-max", type=float, default=1e-5, dest="j_max")
    p.add_argument(
        "--mismatch-max", type=float, default=1e-6, dest="mismatch_max"
    )
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("datagen", help="regenerate the packaged ephemeris tables")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_datagen)

    p = sub.add_parser("bench", help="time the numeric cores on a reference arc")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--days", type=float, default=2.0)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("info", help="report version, core, and data spans")
    p.set_defaults(func=_cmd_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MoongateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

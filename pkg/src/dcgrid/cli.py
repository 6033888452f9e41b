"""Command-line front end.

Exit codes: 0 success or stable, 1 usage/parse/runtime error, 2 infeasible
operating point, 3 unstable verdict.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from .config import RunConfig, dump_config, load_config
from .equilibrium import Equilibrium, solve_equilibrium
from .errors import (BatteryOverload, ConfigError, DcGridError, DegenerateDroop,
                     NoFeasibleTau, NoPhysicalRoot)
from .model import state_labels
from .simulator import (Classification, perturbed_start, simulate, step_load,
                        verdict_from_trajectory)
from .stability import assess
from .sweep import (Criterion, SweepGrid, min_cap_curves, rmax_map, scan_values,
                    tune_tau, write_minc_csv, write_rmax_csv, write_tau_csv)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_UNSTABLE = 3

INFEASIBLE = (NoPhysicalRoot, BatteryOverload, DegenerateDroop)

log = logging.getLogger("dcgrid")


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


def _write_equilibrium(eq: Equilibrium, path: Path) -> None:
    s = eq.state
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["quantity", "index", "value"])
        for name, arr in (("i_B", s.i_b), ("alpha", s.alpha), ("alpha_ref", s.alpha_ref),
                          ("i_dc", eq.i_dc)):
            for j, val in enumerate(arr, start=1):
                writer.writerow([name, j, _fmt(val)])
        writer.writerow(["v", 1, _fmt(s.v)])
        writer.writerow(["residual_norm", "", _fmt(eq.residual_norm)])


def cmd_equilibrium(cfg: RunConfig, args) -> int:
    eq = solve_equilibrium(cfg.params)
    s = eq.state
    print(f"v      = {s.v:.6f} p.u.")
    for j in range(s.n):
        print(f"ESS {j + 1}: i_B = {s.i_b[j]:.6f}  alpha = {s.alpha[j]:.6f}  "
              f"alpha_ref = {s.alpha_ref[j]:.6f}  i_dc = {eq.i_dc[j]:.6f}")
    print(f"residual max|f| = {eq.residual_norm:.3e}")
    _write_equilibrium(eq, args.out / "equilibrium.csv")
    return EXIT_OK


def cmd_assess(cfg: RunConfig, args) -> int:
    rep = assess(cfg.params, paper_layout=args.paper_structure)
    rep.to_csv(args.out / "eigs.csv")
    for lam in rep.eigenvalues:
        print(f"  {lam.real: .6e} {lam.imag:+.6e}j")
    flag = " (marginal)" if rep.marginal else ""
    print(f"r_max = {rep.r_max:.6e} 1/s -> {'stable' if rep.ssasc else 'unstable'}{flag}")
    return EXIT_OK if rep.ssasc else EXIT_UNSTABLE


def cmd_simulate(cfg: RunConfig, args) -> int:
    sim = cfg.simulate
    eq, x0 = perturbed_start(cfg.params, sim.perturbation)
    traj = simulate(cfg.params, x0, sim.t_end, sim.sim_controls())
    traj.to_csv(args.out / "trajectory.csv")
    verdict = verdict_from_trajectory(traj, eq.state.to_array(), sim.decay_factor,
                                      sim.growth_factor)
    print(f"verdict: {verdict.classification.value} "
          f"(initial {verdict.initial_deviation:.3e}, final {verdict.final_deviation:.3e}, "
          f"peak {verdict.peak_deviation:.3e}, t = {verdict.t_final:g} s; {traj.message})")
    return EXIT_UNSTABLE if verdict.classification is Classification.UNSTABLE else EXIT_OK


def cmd_step_load(cfg: RunConfig, args) -> int:
    st = cfg.step_load
    traj = step_load(cfg.params, st.delta_p, st.t_step, st.t_end, cfg.simulate.sim_controls())
    traj.to_csv(args.out / "trajectory.csv")
    final = dict(zip(state_labels(cfg.params.n), traj.states[-1]))
    print(f"final v = {final['v']:.6f} p.u. at t = {traj.times[-1]:g} s ({traj.message})")
    return EXIT_UNSTABLE if traj.diverged else EXIT_OK


def cmd_sweep_minc(cfg: RunConfig, args) -> int:
    sw = cfg.sweep
    criterion = Criterion.parse(args.criterion)
    results = min_cap_curves(cfg.params, sw.l_values, sw.d_values, (sw.c_min, sw.c_max),
                             sw.c_resolution, criterion, jobs=args.jobs, bisect=sw.bisect,
                             classify_controls=cfg.simulate.classify_controls(),
                             paper_layout=args.paper_structure)
    write_minc_csv(results, args.out / "minc.csv")
    for r in results:
        shown = f"{r.c_min * 1e3:.1f} mF" if r.found else "not found in range"
        print(f"D={r.droop:g} L={r.l_b * 1e3:g} mH: C_min = {shown}")
    return EXIT_OK


def _grid(cfg: RunConfig, criterion: Criterion) -> SweepGrid:
    sw = cfg.sweep
    step = sw.rmax_c_step if sw.rmax_c_step is not None else sw.c_resolution
    return SweepGrid(tuple(scan_values(sw.c_min, sw.c_max, step)), sw.l_values,
                     sw.d_values, criterion)


def cmd_sweep_rmax(cfgs: list[RunConfig], args) -> int:
    bases = {}
    for cfg in cfgs:
        label = Path(cfg.source).stem
        if label in bases:
            raise ConfigError(f"duplicate operating-point label {label!r}")
        bases[label] = cfg.params
    rows = rmax_map(bases, _grid(cfgs[0], Criterion.SSASC), jobs=args.jobs,
                    paper_layout=args.paper_structure)
    write_rmax_csv(rows, args.out / "rmax.csv")
    print(f"{len(rows)} cells written, "
          f"{sum(1 for r in rows if r.r_max < 0)} satisfy r_max < 0, "
          f"{sum(1 for r in rows if r.error)} failed")
    return EXIT_OK


def cmd_tune_tau(cfg: RunConfig, args) -> int:
    sw = cfg.sweep
    grid = _grid(cfg, Criterion.SIMULATION)
    try:
        result = tune_tau(cfg.params, grid, sw.tau_candidates, jobs=args.jobs,
                          classify_controls=cfg.simulate.classify_controls(),
                          paper_layout=args.paper_structure, stop_at_first=False)
    except NoFeasibleTau as exc:
        write_tau_csv(exc.result, args.out / "tau.csv")
        raise
    write_tau_csv(result, args.out / "tau.csv")
    for tau, count in result.table:
        print(f"tau = {tau * 1e3:g} ms: {count} counterexamples")
    print(f"tau* = {result.tau_star * 1e3:g} ms")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plotting import plot_csv

    kind = plot_csv(args.csv_in, args.svg_out)
    print(f"wrote {kind} figure to {args.svg_out}")
    return EXIT_OK


CONFIG_COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "assess": cmd_assess,
    "simulate": cmd_simulate,
    "step-load": cmd_step_load,
    "sweep-minc": cmd_sweep_minc,
    "tune-tau": cmd_tune_tau,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", required=True, type=Path,
                        help="run configuration file (repeat for sweep-rmax)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for sweeps")
    common.add_argument("--paper-structure", action="store_true",
                        help="use the published block structure of the Jacobian")
    common.add_argument("--criterion", choices=["ssasc", "sim"], default="ssasc")
    common.add_argument("--dump-config", action="store_true",
                        help="print the parsed configuration in canonical form and exit")

    parser = argparse.ArgumentParser(prog="dcgrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(CONFIG_COMMANDS) + ["sweep-rmax"]:
        sub.add_parser(name, parents=[common])
    plot = sub.add_parser("plot", help="render a sweep CSV as an SVG figure")
    plot.add_argument("csv_in", type=Path)
    plot.add_argument("svg_out", type=Path)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("DCGRID_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR

    try:
        if args.command == "plot":
            return cmd_plot(args)
        cfgs = [load_config(p) for p in args.config]
        if args.dump_config:
            for cfg in cfgs:
                sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "sweep-rmax":
            return cmd_sweep_rmax(cfgs, args)
        if len(cfgs) != 1:
            raise ConfigError(f"{args.command} takes exactly one --config")
        return CONFIG_COMMANDS[args.command](cfgs[0], args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except INFEASIBLE as exc:
        print(f"infeasible operating point: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DcGridError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

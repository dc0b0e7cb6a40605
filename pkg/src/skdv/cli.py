"""Command-line front end.

Exit codes: 0 success, 1 criterion failure, 2 configuration error, 3 numeric blow-up.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .charges import ChargeReport, charge_h1, charge_m, charge_report, charge_v
from .config import RunConfig, load_config
from .dynamics import IntegratorConfig, simulate
from .errors import ConfigError, MeasurementError, NumericError
from .fields import SimState, format_float, write_snapshot
from .grid import Grid, default_length
from .soliton import SolitonParams, measure_speed, soliton_charges, soliton_profile, traveling_wave_residual
from .spectrum import analytic_errors, build_operator, eigen_pairs
from .stability import (dump_summary, ensemble_summary, make_perturbation, run_ensemble,
                        run_ground_state_stability)

log = logging.getLogger("skdv")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


def _emit(doc: dict, path: Path | None = None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.write_text(text)
    sys.stdout.write(text)


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.output_dir()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output.directory '{out}' is not writable: {exc}") from exc
    return out


def initial_state(cfg: RunConfig, grid: Grid, seed: int | None = None) -> SimState:
    k = cfg.clifford.k
    u = soliton_profile(cfg.soliton_params(), 0.0, grid)
    xi = np.zeros((k, grid.n))
    spec = cfg.perturbation_spec(seed)
    if spec is not None:
        du, dxi = make_perturbation(spec, grid, k)
        u, xi = u + du, dxi
    return SimState(grid, 0.0, u, xi)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    grid = cfg.make_grid()
    out = _out_dir(cfg)
    start = initial_state(cfg, grid)
    snaps = cfg.output.emit_snapshots
    rows = []
    counter = iter(range(10**9))

    def record(s: SimState):
        rows.append(charge_report(s).row())
        i = next(counter)
        if snaps:
            write_snapshot(out / f"snapshot_{i:05d}.csv", s)

    simulate(start, cfg.integrator.t_end, cfg.integrator_config(), cfg.integrator.sample_every,
             callback=record)
    with (out / "timeseries.csv").open("w") as fh:
        fh.write(",".join(ChargeReport.header(cfg.clifford.k)) + "\n")
        for r in rows:
            fh.write(",".join(format_float(v) for v in r) + "\n")
    first, last = rows[0], rows[-1]
    k = cfg.clifford.k
    iv, im = 1 + k + 1, 1 + k + 2
    _emit({
        "timeseries": str(out / "timeseries.csv"),
        "samples": len(rows),
        "rel_drift_V": abs(last[iv] - first[iv]) / max(1.0, abs(first[iv])),
        "rel_drift_M": abs(last[im] - first[im]) / max(1.0, abs(first[im])),
    })
    return EXIT_OK


def cmd_soliton_check(args) -> int:
    c = args.c
    L = args.L if args.L is not None else default_length(c)
    grid = Grid(args.n, L)
    params = SolitonParams(c)
    phi = soliton_profile(params, 0.0, grid)
    start = SimState(grid, 0.0, phi, np.zeros((1, grid.n)))
    dt = min(1e-3, 0.5 * grid.dx / max(1.0, 3.0 * c))
    steps = int(round(2.0 / dt))
    traj = simulate(start, steps * dt, IntegratorConfig(dt), sample_every=max(1, steps // 8))
    v = measure_speed(traj)
    matched = [name for name, cand in (("derived", c), ("paper", 1.0 + c))
               if abs(v - cand) <= 5e-3 * cand]
    exact = soliton_charges(c)
    _emit({
        "c": c,
        "residual": traveling_wave_residual(grid, phi, c),
        "measured_speed": v,
        "matched_convention": matched[0] if len(matched) == 1 else None,
        "charge_values": {
            "V": charge_v(start), "M": charge_m(start), "H_1": charge_h1(grid, phi),
            "V_exact": exact["V"], "M_exact": exact["M"], "H_1_exact": exact["H_1"],
        },
    })
    return EXIT_OK if len(matched) == 1 else EXIT_FAIL


def cmd_spectrum(args) -> int:
    c = args.c
    L = args.L if args.L is not None else default_length(c)
    grid = Grid(args.n, L)
    spec = eigen_pairs(build_operator(c, grid), max(2, args.k))
    _emit({"c": c, "n": grid.n, "L": grid.length,
           "eigenvalues": spec.eigenvalues.tolist(),
           "analytic_errors": analytic_errors(spec)})
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = load_config(args.config)
    grid = cfg.make_grid()
    out = _out_dir(cfg)
    base = cfg.perturbation_spec()
    if base is None:
        raise ConfigError("stability needs perturbation.amplitude > 0")
    seeds = range(cfg.perturbation.seed, cfg.perturbation.seed + args.seeds)
    reports = run_ensemble(cfg.soliton.c, seeds, base, cfg.integrator.t_end,
                           cfg.integrator_config(), grid, k=cfg.clifford.k,
                           sample_every=cfg.integrator.sample_every, jobs=args.jobs,
                           enforce_equal_v=cfg.stability.enforce_equal_v,
                           convention=cfg.soliton.speed_convention)
    for seed, rep in reports.items():
        rep.write_csv(out / f"stability_seed{seed}.csv")
    summary = ensemble_summary(reports, cfg.stability.factor, cfg.stability.dm_rtol)
    dump_summary(summary, out / "ensemble.json")
    _emit({"all_pass": summary["all_pass"], "ensemble": str(out / "ensemble.json")})
    return EXIT_OK if summary["all_pass"] else EXIT_FAIL


def cmd_ground_state(args) -> int:
    cfg = load_config(args.config)
    grid = cfg.make_grid()
    out = _out_dir(cfg)
    spec = cfg.perturbation_spec()
    if spec is None:
        raise ConfigError("ground-state needs perturbation.amplitude > 0")
    rep = run_ground_state_stability(spec, cfg.integrator.t_end, cfg.integrator_config(), grid,
                                     k=cfg.clifford.k, sample_every=cfg.integrator.sample_every)
    doc = rep.to_dict()
    _emit(doc, out / "ground_state.json")
    return EXIT_OK if rep.bound_ok and rep.budget_ok else EXIT_FAIL


def cmd_verify_all(args) -> int:
    from .acceptance import run_all

    results = run_all(echo=print, jobs=args.jobs, dump_dir=args.dump_dir)
    failed = [r for r in results if not r.passed]
    if args.report:
        Path(args.report).write_text(json.dumps(
            [{"criterion": r.number, "name": r.name, "pass": r.passed, "detail": r.detail}
             for r in results], indent=2, sort_keys=True, default=float) + "\n")
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skdv", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one configuration, write timeseries.csv")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("soliton-check", help="traveling-wave residual, speed and charges")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--L", type=float, default=None)
    p.set_defaults(func=cmd_soliton_check)

    p = sub.add_parser("spectrum", help="lowest eigenvalues of the linearized operator")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--L", type=float, default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("stability", help="perturbed-soliton ensemble")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("ground-state", help="small-data run against the a priori bound")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser("verify-all", help="run every acceptance criterion")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", default=None, help="write the full JSON detail here")
    p.add_argument("--dump-dir", default=None, help="where to dump states that violate a bound")
    p.set_defaults(func=cmd_verify_all)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, MeasurementError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

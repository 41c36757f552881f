"""Command-line entry points.

Every subcommand takes --config <file.json> and --out <dir>; --seed is
reserved (the core paths are deterministic and use no randomness).  Exit
codes: 0 success, 2 configuration/validation error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cell import (
    capacity_study,
    export_capacity_csv,
    export_capacity_json,
    radial_capacity_oracle,
)
from .coefficients import CoefficientError, assemble_coefficient, evaluate_b_eps
from .degenerate import export_mass_ledger_csv, solve_degenerate
from .fp_solver import export_diagnostics_csv, export_snapshots_csv, solve_fp
from .geometry import Ball, GeometryError, build_inclusions, classify_regime, CRITICAL
from .harness import (
    commutation_report,
    emit_commutation_csv,
    emit_commutation_json,
    emit_report_csv,
    emit_report_json,
    run_scheme_one,
    run_scheme_two,
)
from .homogenized import export_series_csv
from .oned import (
    TwoPhaseSpec,
    abel_identity_residual,
    export_blowup_csv,
    run_blowup,
    solve_two_phase_1d,
)
from .pde_core import SolverError
from .scenario import ScenarioConfig, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _load(args) -> ScenarioConfig:
    if args.config is None:
        return ScenarioConfig()
    return load_scenario(args.config)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    eps, delta = cfg.eps_list[0], cfg.delta_list[0]
    eta = min(cfg.eta_rule(eps), 1.0)
    geom = build_inclusions(cfg.grid(), eps, eta, cfg.shape, on_unresolved=cfg.unresolved_policy)
    coeff = assemble_coefficient(geom, cfg.coefficient, eps, delta)
    sol = solve_fp(
        coeff, cfg.u0.spatial(cfg.grid()), f=cfg.f.as_source(cfg.grid()),
        T=cfg.T, n_steps=cfg.n_steps, store_every=cfg.store_every,
        tol=cfg.tol, jacobi=cfg.jacobi,
    )
    export_snapshots_csv(sol, out / "snapshots.csv")
    export_diagnostics_csv(sol, out / "diagnostics.csv")
    print(f"solve: eps={eps} delta={delta} -> {out}")
    return EXIT_OK


def cmd_degenerate(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    eps = cfg.eps_list[0]
    eta = min(cfg.eta_rule(eps), 1.0)
    grid = cfg.grid()
    geom = build_inclusions(grid, eps, eta, cfg.shape, on_unresolved=cfg.unresolved_policy)
    sol = solve_degenerate(
        geom, evaluate_b_eps(cfg.coefficient, grid, eps), cfg.u0.spatial(grid),
        f=cfg.f.as_source(grid), T=cfg.T, n_steps=cfg.n_steps,
        store_every=cfg.store_every, tol=cfg.tol,
    )
    export_mass_ledger_csv(sol, out / "mass_ledger.csv")
    print(f"degenerate: eps={eps} -> {out}")
    return EXIT_OK


def cmd_cell(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    study = capacity_study(cfg.shape)
    export_capacity_csv(study, out / "cell.csv")
    export_capacity_json(study, out / "cell.json")
    if isinstance(cfg.shape, Ball):
        oracle = radial_capacity_oracle(cfg.shape.rho)
        with open(out / "cell_oracle.json", "w") as fh:
            json.dump({"radial_oracle_theta": oracle}, fh, indent=2)
            fh.write("\n")
    print(f"cell: theta={study.theta:.6f} +- {study.error_estimate:.2e} -> {out}")
    return EXIT_OK


def cmd_homog(args) -> int:
    from .harness import _regime_of, _target_for_regime

    cfg = _load(args)
    out = _outdir(args)
    regime = _regime_of(cfg)
    theta = None
    if regime.tag == CRITICAL:
        theta = capacity_study(cfg.shape).theta
    sol, lam_field, tag = _target_for_regime(cfg, regime, cfg.grid(), theta)
    export_series_csv(sol, out / "homogenized.csv", lam=lam_field if tag == "DMD" else None)
    print(f"homog: regime={regime.tag} target={tag} -> {out}")
    return EXIT_OK


def cmd_oned(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    oc = cfg.oned
    spec = TwoPhaseSpec(alpha=oc.alpha, beta1=oc.beta1, beta2=oc.beta2, T=oc.T)
    sol, trace = solve_two_phase_1d(spec, h=oc.h, dt=oc.dt)
    times, resid = abel_identity_residual(trace, spec)
    import csv

    with open(out / "two_phase_trace.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "u_left", "u_right", "flux", "mass"])
        for k in range(len(trace.times)):
            wr.writerow(
                [f"{x:.12e}" for x in
                 (trace.times[k], trace.u_left[k], trace.u_right[k], trace.flux[k], trace.mass[k])]
            )
    with open(out / "abel_residual.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "residual"])
        for t, r in zip(times, resid):
            wr.writerow([f"{t:.12e}", f"{r:.12e}"])
    print(f"oned: interface -> {out}")
    return EXIT_OK


def cmd_blowup(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    bc = cfg.blowup
    sched = run_blowup(alpha=bc.alpha, j_max=bc.j_max, h=bc.h, dt=bc.dt, window=bc.window)
    export_blowup_csv(sched, out / "blowup_schedule.csv")
    import csv

    x = sched.grid.meshgrid()[0]
    for s, u_stage in zip(sched.stages, sched.stage_fields):
        with open(out / f"blowup_stage_{s.j}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "u"])
            for xi, ui in zip(x, u_stage):
                wr.writerow([f"{xi:.12e}", f"{ui:.12e}"])
    print(f"blowup: {sched.achieved} stages, peaks "
          + ", ".join(f"{s.peak:.3f}" for s in sched.stages) + f" -> {out}")
    return EXIT_OK


def cmd_sweep_scheme1(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    rep = run_scheme_one(cfg)
    emit_report_csv(rep, out / "scheme1.csv")
    emit_report_json(rep, out / "scheme1.json")
    print(f"sweep-scheme1: {len(rep.rows)} rows -> {out}")
    return EXIT_OK


def cmd_sweep_scheme2(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    rep = run_scheme_two(cfg)
    emit_report_csv(rep, out / "scheme2.csv")
    emit_report_json(rep, out / "scheme2.json")
    print(f"sweep-scheme2: {len(rep.rows)} rows -> {out}")
    return EXIT_OK


def cmd_commutation(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    regime = classify_regime(cfg.eta_rule, cfg.n)
    k = regime.k if regime.tag == CRITICAL else 1.0
    theta = capacity_study(cfg.shape).theta
    rows, meta = commutation_report(cfg, theta=theta, k=k)
    emit_commutation_csv(rows, out / "commutation.csv")
    emit_commutation_json(rows, meta, out / "commutation.json")
    ok = all(r.match for r in rows)
    print("commutation: " + "; ".join(f"{r.regime}={r.verdict}" for r in rows))
    return EXIT_OK if ok else EXIT_OK  # verdict mismatches are data, not errors


COMMANDS = {
    "solve": cmd_solve,
    "degenerate": cmd_degenerate,
    "cell": cmd_cell,
    "homog": cmd_homog,
    "oned": cmd_oned,
    "blowup": cmd_blowup,
    "sweep-scheme1": cmd_sweep_scheme1,
    "sweep-scheme2": cmd_sweep_scheme2,
    "commutation": cmd_commutation,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fphom",
        description="Fokker-Planck diffusion through periodic inclusion arrays: "
        "degeneration and homogenization limits at desk scale.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None, help="scenario JSON")
        sp.add_argument("--out", type=str, default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="reserved; core paths use no randomness")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, GeometryError, CoefficientError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

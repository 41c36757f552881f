"""Sweep drivers: eps/delta scans, error metrics against each limit problem,
the commutation table, and file emission.

Metrics follow the convergence statements: the fine field of the first
scheme is the degenerate solution with the inner part replaced by F, and
distances to the upscaled targets are nodal L2(Omega_T) norms; because the
theory provides no rates, sweeps are judged on monotone gap decrease.  The
weak-test battery {1, x1, cos(pi x1), cos(pi x1) cos(pi x2)} probes the
total measures (bulk plus interface deposit against the limiting density).

Report CSVs are deterministic byte-for-byte for identical configs: fixed
column orders, floats always "%.12e", no timing columns (runtimes live in
the JSON summary, which is documented as non-deterministic).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .cell import capacity_study, strange_term_coefficient
from .coefficients import assemble_coefficient, evaluate_b_eps, harmonic_mean_field, harmonic_mean_delta_field
from .degenerate import solve_degenerate, weak_test_battery
from .fp_solver import SolutionField, solve_fp
from .geometry import (
    CONSTANT_ETA,
    CRITICAL,
    SUBCRITICAL,
    SUPERCRITICAL,
    ScalingRegime,
    build_inclusions,
    classify_regime,
)
from .homogenized import HomogenizedProblemSpec, ad_solution, limiting_measure_density, solve_dmd, solve_pd
from .pde_core import Grid
from .scenario import ScenarioConfig


REPORT_SCHEMA = "fphom-report-v1"
COMMUTATION_SCHEMA = "fphom-commutation-v1"

REPORT_COLUMNS = [
    "sweep",
    "param",
    "value",
    "regime",
    "l2_gap",
    "l2_gap_outer",
    "fine_l2_norm",
    "weak_gap_max",
    "total_measure_gap",
    "fitted_rate",
    "expected_rate",
    "v0_sup_l2",
]

COMMUTATION_COLUMNS = [
    "regime",
    "limit_scheme1",
    "limit_scheme2",
    "rel_gap",
    "collapse_gap",
    "verdict",
    "expected",
    "match",
]


@dataclass
class ReportRow:
    sweep: str
    param: str
    value: float
    regime: str
    l2_gap: float = math.nan
    l2_gap_outer: float = math.nan
    fine_l2_norm: float = math.nan
    weak_gap_max: float = math.nan
    total_measure_gap: float = math.nan
    fitted_rate: float = math.nan
    expected_rate: float = math.nan
    v0_sup_l2: float = math.nan


@dataclass
class ConvergenceReport:
    rows: list[ReportRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "rows": [asdict(r) for r in self.rows],
            "meta": self.meta,
            "timing": self.timing,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "ConvergenceReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unknown report schema {d.get('schema')!r}")
        rep = ConvergenceReport(meta=d.get("meta", {}), timing=d.get("timing", {}))
        float_fields = {
            "l2_gap", "l2_gap_outer", "fine_l2_norm", "weak_gap_max",
            "total_measure_gap", "fitted_rate", "expected_rate", "v0_sup_l2", "value",
        }
        for row in d["rows"]:
            fixed = {
                k: (math.nan if (v is None and k in float_fields) else v)
                for k, v in row.items()
            }
            rep.rows.append(ReportRow(**fixed))
        return rep

    def sweep_rows(self, sweep: str) -> list[ReportRow]:
        return [r for r in self.rows if r.sweep == sweep]

    def sweeps(self) -> list[str]:
        seen: list[str] = []
        for r in self.rows:
            if r.sweep not in seen:
                seen.append(r.sweep)
        return seen


# ---------------------------------------------------------------------------
# norms over stored series

def series_l2_norm(grid: Grid, times, fields) -> float:
    """L2(Omega_T) norm of a stored series, trapezoid in time."""
    sq = np.array([grid.inner(f, f) for f in fields])
    return float(math.sqrt(max(np.trapezoid(sq, times), 0.0)))


def series_l2_gap(grid: Grid, times, fine, target, mask=None) -> float:
    W = grid.node_weights()
    if mask is not None:
        W = np.where(mask, W, 0.0)
    sq = np.array(
        [float(np.sum(W * (a - b) ** 2)) for a, b in zip(fine, target)]
    )
    return float(math.sqrt(max(np.trapezoid(sq, times), 0.0)))


def _measure_series_at(ms, stored_times) -> np.ndarray:
    """Pick the per-step measure trace at the stored snapshot times."""
    idx = [int(np.argmin(np.abs(ms.times - t))) for t in stored_times]
    return ms.surface[:, idx], ms.bulk[:, idx]


def battery_integrals(grid: Grid, fields, battery: dict) -> np.ndarray:
    W = grid.node_weights()
    names = list(battery)
    out = np.empty((len(names), len(fields)))
    for j, nm in enumerate(names):
        phi = battery[nm]
        for k, u in enumerate(fields):
            out[j, k] = float(np.sum(W * u * phi))
    return out


def fit_decay_rate(times, masses, window=(0.25, 1.0)) -> float:
    """Log-linear fit of a positive decaying trace over a time window
    (fractions of the horizon)."""
    t = np.asarray(times, dtype=float)
    m = np.asarray(masses, dtype=float)
    lo, hi = window[0] * t[-1], window[1] * t[-1]
    sel = (t >= lo) & (t <= hi) & (m > 0)
    if sel.sum() < 2:
        return math.nan
    A = np.stack([np.ones(sel.sum()), t[sel]], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(m[sel]), rcond=None)
    return float(-coef[1])


# ---------------------------------------------------------------------------
# scheme one: delta -> 0 first, then eps -> 0

def _regime_of(config: ScenarioConfig) -> ScalingRegime:
    if config.regime_override is not None:
        tag = config.regime_override
        if tag == CRITICAL:
            k = classify_regime(config.eta_rule, config.n).k
            return ScalingRegime(CRITICAL, k=k)
        if tag == CONSTANT_ETA:
            return ScalingRegime(CONSTANT_ETA, eta_const=config.eta_rule.c)
        return ScalingRegime(tag, k=0.0 if tag == SUBCRITICAL else math.inf)
    return classify_regime(config.eta_rule, config.n)


def _target_for_regime(
    config: ScenarioConfig, regime: ScalingRegime, grid: Grid, theta: float | None
):
    """Solve the regime's limit problem once; returns (sol, lam_field, tag)."""
    M = harmonic_mean_field(config.coefficient, grid, config.quadrature_order)
    u0 = config.u0.spatial(grid)
    f_src = config.f.as_source(grid)
    store = config.store_every or max(1, config.n_steps // 100)
    if regime.tag == SUBCRITICAL:
        spec = HomogenizedProblemSpec(
            grid=grid, variant="PD", mean=M, u0=u0, f=f_src, T=config.T, n_steps=config.n_steps
        )
        return solve_pd(spec, store_every=store, tol=config.tol), np.zeros(grid.shape), "PD"
    if regime.tag == CRITICAL:
        if theta is None:
            raise ValueError("critical regime requires the capacity Theta")
        k2t = strange_term_coefficient(regime, theta)
        spec = HomogenizedProblemSpec(
            grid=grid, variant="DMD", mean=M, k2theta=k2t, u0=u0, f=f_src,
            T=config.T, n_steps=config.n_steps,
        )
        return solve_dmd(spec, store_every=store, tol=config.tol), k2t / M, "DMD"
    # supercritical and constant eta both lead to the AD limit in scheme one
    times = None
    sol = ad_solution(grid, u0, f=f_src, T=config.T,
                      n_times=config.n_steps // store + 1)
    return sol, None, "AD"


def run_scheme_one(
    config: ScenarioConfig, theta: float | None = None, sweep_name: str | None = None
) -> ConvergenceReport:
    """First asymptotic scheme: degenerate solves compared per eps against
    the regime target (PD / DMD / AD)."""
    t_start = time.time()
    grid = config.grid()
    regime = _regime_of(config)
    if regime.tag == CRITICAL and theta is None:
        study = capacity_study(config.shape)
        theta = study.theta
    target, lam_field, target_tag = _target_for_regime(config, regime, grid, theta)
    if target_tag == "DMD":
        target_measure_fields = limiting_measure_density(target, lam=lam_field)
    else:
        target_measure_fields = target.u
    battery = weak_test_battery(grid)
    target_weak = battery_integrals(grid, target_measure_fields, battery)
    M = harmonic_mean_field(config.coefficient, grid, config.quadrature_order)
    name = sweep_name or f"scheme1-{regime.tag.lower()}"

    report = ConvergenceReport(
        meta={
            "scheme": 1,
            "regime": regime.tag,
            "target": target_tag,
            "k": regime.k,
            "theta": theta,
            "config": config.to_json(),
        }
    )

    u0 = config.u0.spatial(grid)
    f_src = config.f.as_source(grid)
    store = config.store_every or max(1, config.n_steps // 100)

    def one_eps(eps: float):
        eta = min(config.eta_rule(eps), 1.0)
        geom = build_inclusions(grid, eps, eta, config.shape, on_unresolved=config.unresolved_policy)
        b_eps = evaluate_b_eps(config.coefficient, grid, eps)
        fine = solve_degenerate(
            geom, b_eps, u0, f=f_src, T=config.T, n_steps=config.n_steps,
            store_every=store, tol=config.tol,
        )
        return eps, geom, fine

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(one_eps, config.eps_list))

    for eps, geom, fine in results:
        t0 = time.time()
        surf, bulk = _measure_series_at(fine.measure, fine.times)
        fine_weak = surf + bulk
        weak_gaps = np.max(np.abs(fine_weak - target_weak), axis=1)
        j_one = fine.measure.phi_names.index("one")
        row = ReportRow(
            sweep=name,
            param="eps",
            value=eps,
            regime=regime.tag,
            l2_gap=series_l2_gap(grid, fine.times, fine.u, target.u),
            l2_gap_outer=series_l2_gap(grid, fine.times, fine.u, target.u, mask=geom.outer_mask),
            fine_l2_norm=series_l2_norm(grid, fine.times, fine.u),
            weak_gap_max=float(np.max(weak_gaps)),
            total_measure_gap=float(weak_gaps[j_one]),
        )
        if regime.tag == CRITICAL:
            row.fitted_rate = fit_decay_rate(fine.measure.times, fine.measure.bulk[j_one])
            row.expected_rate = strange_term_coefficient(regime, theta) / float(np.mean(M))
        report.rows.append(row)
        report.timing[f"eps={eps:g}"] = time.time() - t0
    report.timing["total_s"] = time.time() - t_start
    return report


# ---------------------------------------------------------------------------
# scheme two: homogenize at fixed delta, then let delta -> 0

def run_scheme_two(config: ScenarioConfig, sweep_name: str | None = None) -> ConvergenceReport:
    """Second asymptotic scheme.

    For eta(eps) -> 0 the target is the delta-independent PD problem; for
    constant eta (= 1) the target is PD_delta per delta, followed by the
    delta -> 0 analysis against the AD density F (weak-test battery and the
    sup-in-t L2 norm of v0, which scales like delta).
    """
    t_start = time.time()
    grid = config.grid()
    battery = weak_test_battery(grid)
    u0 = config.u0.spatial(grid)
    f_src = config.f.as_source(grid)
    store = config.store_every or max(1, config.n_steps // 100)
    eta_to_zero = config.eta_rule.p > 0
    base = sweep_name or ("scheme2-eta0" if eta_to_zero else "scheme2-eta1")

    report = ConvergenceReport(
        meta={
            "scheme": 2,
            "eta_to_zero": eta_to_zero,
            "config": config.to_json(),
        }
    )

    M_plain = harmonic_mean_field(config.coefficient, grid, config.quadrature_order)
    if eta_to_zero:
        spec = HomogenizedProblemSpec(
            grid=grid, variant="PD", mean=M_plain, u0=u0, f=f_src,
            T=config.T, n_steps=config.n_steps,
        )
        target = solve_pd(spec, store_every=store, tol=config.tol)
        target_weak = battery_integrals(grid, target.u, battery)
        regime_tag = classify_regime(config.eta_rule, config.n).tag
        rows_by_delta: dict[float, list[ReportRow]] = {d: [] for d in config.delta_list}
        indep: dict[str, float] = {}
        indep_resolved: float | None = None
        for eps in config.eps_list:
            eta = min(config.eta_rule(eps), 1.0)
            geom = build_inclusions(
                grid, eps, eta, config.shape, on_unresolved=config.unresolved_policy
            )
            per_delta_fields: list[list[np.ndarray]] = []
            for delta in config.delta_list:
                coeff = assemble_coefficient(geom, config.coefficient, eps, delta)
                fine = solve_fp(
                    coeff, u0, f=f_src, T=config.T, n_steps=config.n_steps,
                    store_every=store, tol=config.tol, jacobi=config.jacobi,
                )
                fine_weak = battery_integrals(grid, fine.u, battery)
                gaps = np.max(np.abs(fine_weak - target_weak), axis=1)
                rows_by_delta[delta].append(
                    ReportRow(
                        sweep=f"{base}-delta{delta:g}",
                        param="eps",
                        value=eps,
                        regime=regime_tag,
                        l2_gap=series_l2_gap(grid, fine.times, fine.u, target.u),
                        l2_gap_outer=series_l2_gap(
                            grid, fine.times, fine.u, target.u, mask=geom.outer_mask
                        ),
                        fine_l2_norm=series_l2_norm(grid, fine.times, fine.u),
                        weak_gap_max=float(np.max(gaps)),
                        total_measure_gap=float(gaps[list(battery).index("one")]),
                    )
                )
                per_delta_fields.append(fine.u)
            if len(per_delta_fields) >= 2:
                g01 = series_l2_gap(grid, target.times, per_delta_fields[0], per_delta_fields[1])
                indep[f"eps={eps:g}"] = g01
                if geom.dropped_cells == 0:
                    indep_resolved = g01
        for delta in config.delta_list:
            report.rows.extend(rows_by_delta[delta])
        if indep:
            report.meta["delta_independence_gaps"] = indep
            report.meta["delta_independence_gap"] = (
                indep_resolved if indep_resolved is not None else list(indep.values())[-1]
            )
            report.meta["delta_independence_pair"] = config.delta_list[:2]
    else:
        eta = min(config.eta_rule.c, 1.0)
        ad = ad_solution(grid, u0, f=f_src, T=config.T, n_times=config.n_steps // store + 1)
        ad_weak = battery_integrals(grid, ad.u, battery)
        for delta in config.delta_list:
            M_delta = harmonic_mean_delta_field(
                config.coefficient, grid, delta, config.shape, config.quadrature_order
            )
            spec = HomogenizedProblemSpec(
                grid=grid, variant="PD_delta", mean=M_delta, u0=u0, f=f_src,
                T=config.T, n_steps=config.n_steps,
            )
            target = solve_pd(spec, store_every=store, tol=config.tol)
            target_weak = battery_integrals(grid, target.u, battery)
            for eps in config.eps_list:
                geom = build_inclusions(
                    grid, eps, eta, config.shape, on_unresolved=config.unresolved_policy
                )
                coeff = assemble_coefficient(geom, config.coefficient, eps, delta)
                fine = solve_fp(
                    coeff, u0, f=f_src, T=config.T, n_steps=config.n_steps,
                    store_every=store, tol=config.tol, jacobi=config.jacobi,
                )
                fine_weak = battery_integrals(grid, fine.u, battery)
                gaps = np.max(np.abs(fine_weak - target_weak), axis=1)
                report.rows.append(
                    ReportRow(
                        sweep=f"{base}-delta{delta:g}",
                        param="eps",
                        value=eps,
                        regime=CONSTANT_ETA,
                        l2_gap=series_l2_gap(grid, fine.times, fine.u, target.u),
                        fine_l2_norm=series_l2_norm(grid, fine.times, fine.u),
                        weak_gap_max=float(np.max(gaps)),
                        total_measure_gap=float(gaps[list(battery).index("one")]),
                    )
                )
            # delta-limit diagnostics on the homogenized problem itself
            v_series = [u / M_delta for u in target.u]
            v_sup = max(grid.norm_l2(v) for v in v_series)
            gaps_F = np.max(np.abs(target_weak - ad_weak), axis=1)
            report.rows.append(
                ReportRow(
                    sweep=f"{base}-deltalimit",
                    param="delta",
                    value=delta,
                    regime=CONSTANT_ETA,
                    l2_gap=series_l2_gap(grid, target.times, target.u, ad.u),
                    weak_gap_max=float(np.max(gaps_F)),
                    total_measure_gap=float(gaps_F[list(battery).index("one")]),
                    v0_sup_l2=float(v_sup),
                )
            )
    report.timing["total_s"] = time.time() - t_start
    return report


# ---------------------------------------------------------------------------
# commutation of the two limits

EXPECTED_COMMUTATION = {
    SUBCRITICAL: "commute",
    CRITICAL: "do not commute",
    SUPERCRITICAL: "do not commute",
    CONSTANT_ETA: "commute",
}


@dataclass
class CommutationRow:
    regime: str
    limit_scheme1: str
    limit_scheme2: str
    rel_gap: float
    collapse_gap: float
    verdict: str
    expected: str
    match: bool


def commutation_report(
    config: ScenarioConfig,
    theta: float,
    k: float = 1.0,
    threshold: float = 0.1,
) -> tuple[list[CommutationRow], dict]:
    """Compare the two schemes' limit problems per regime on shared data.

    Scheme one ends at PD (subcritical), DMD (critical), AD (supercritical
    and eta = 1); scheme two ends at PD for every eta(eps) -> 0 rule and at
    PD_delta -> AD for eta = 1.  The verdict measures the relative
    L2(Omega_T) distance between the two limit densities; for the critical
    regime the strange term is also removed from the DMD target to show the
    gap collapsing to the subcritical level.
    """
    grid = config.grid()
    M = harmonic_mean_field(config.coefficient, grid, config.quadrature_order)
    u0 = config.u0.spatial(grid)
    f_src = config.f.as_source(grid)
    store = config.store_every or max(1, config.n_steps // 100)
    kw = dict(T=config.T, n_steps=config.n_steps)

    pd = solve_pd(
        HomogenizedProblemSpec(grid=grid, variant="PD", mean=M, u0=u0, f=f_src, **kw),
        store_every=store, tol=config.tol,
    )
    k2t = k * k * theta
    dmd = solve_dmd(
        HomogenizedProblemSpec(grid=grid, variant="DMD", mean=M, k2theta=k2t, u0=u0, f=f_src, **kw),
        store_every=store, tol=config.tol,
    )
    ad = ad_solution(grid, u0, f=f_src, T=config.T, n_times=len(pd.times))
    delta_min = config.delta_list[-1]
    M_delta = harmonic_mean_delta_field(
        config.coefficient, grid, delta_min, config.shape, config.quadrature_order
    )
    pdd = solve_pd(
        HomogenizedProblemSpec(grid=grid, variant="PD_delta", mean=M_delta, u0=u0, f=f_src, **kw),
        store_every=store, tol=config.tol,
    )

    scale = series_l2_norm(grid, pd.times, ad.u)  # data-sized reference

    def rel_gap(a, b):
        return series_l2_gap(grid, pd.times, a.u, b.u) / scale

    rows: list[CommutationRow] = []

    def add(regime, s1_name, s1, s2_name, s2, collapse=math.nan):
        g = rel_gap(s1, s2)
        verdict = "commute" if g <= threshold else "do not commute"
        rows.append(
            CommutationRow(
                regime=regime,
                limit_scheme1=s1_name,
                limit_scheme2=s2_name,
                rel_gap=g,
                collapse_gap=collapse,
                verdict=verdict,
                expected=EXPECTED_COMMUTATION[regime],
                match=verdict == EXPECTED_COMMUTATION[regime],
            )
        )

    add(SUBCRITICAL, "PD", pd, "PD", pd)
    add(CRITICAL, "DMD", dmd, "PD", pd, collapse=rel_gap(pd, pd))
    add(SUPERCRITICAL, "AD", ad, "PD", pd)
    add(CONSTANT_ETA, "AD", ad, f"PD_delta(delta={delta_min:g})->AD", pdd)

    meta = {
        "schema": COMMUTATION_SCHEMA,
        "threshold": threshold,
        "k": k,
        "theta": theta,
        "k2theta": k2t,
        "delta_min": delta_min,
        "scale": scale,
        "config": config.to_json(),
    }
    return rows, meta


# ---------------------------------------------------------------------------
# emission

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12e}"
    return str(x)


def _json_clean(obj):
    """Strict-JSON sanitation: non-finite floats become null (json.dump would
    otherwise emit bare NaN, which strict parsers reject)."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    return obj


def emit_report_csv(report: ConvergenceReport, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(REPORT_COLUMNS)
        for r in report.rows:
            wr.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])


def emit_report_json(report: ConvergenceReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(_json_clean(report.to_json_dict()), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report_json(path) -> ConvergenceReport:
    with open(path) as fh:
        return ConvergenceReport.from_json_dict(json.load(fh))


def emit_commutation_csv(rows: list[CommutationRow], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(COMMUTATION_COLUMNS)
        for r in rows:
            wr.writerow([_fmt(getattr(r, c)) for c in COMMUTATION_COLUMNS])


def emit(obj, fmt: str, path) -> None:
    """Route a report or solution to a writer: fmt 'csv' or 'json'.

    I/O errors surface with the path attached.
    """
    from .fp_solver import SolutionField, export_diagnostics_csv, export_snapshots_csv

    try:
        if isinstance(obj, ConvergenceReport):
            if fmt == "csv":
                emit_report_csv(obj, path)
            elif fmt == "json":
                emit_report_json(obj, path)
            else:
                raise ValueError(f"unknown format {fmt!r} for a report")
        elif isinstance(obj, SolutionField):
            if fmt == "csv":
                export_snapshots_csv(obj, path)
            elif fmt == "diagnostics-csv":
                export_diagnostics_csv(obj, path)
            else:
                raise ValueError(f"unknown format {fmt!r} for a solution")
        else:
            raise ValueError(f"emit does not handle {type(obj).__name__}")
    except OSError as exc:
        raise OSError(f"emit failed for {path}: {exc}") from exc


def emit_commutation_json(rows: list[CommutationRow], meta: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            _json_clean(
                {"schema": COMMUTATION_SCHEMA, "rows": [asdict(r) for r in rows], "meta": meta}
            ),
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")

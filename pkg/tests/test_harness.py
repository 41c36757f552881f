import json

import numpy as np
import pytest

from fphom.coefficients import CoefficientSpec
from fphom.geometry import Ball, EtaRule
from fphom.harness import (
    ConvergenceReport,
    ReportRow,
    commutation_report,
    emit_commutation_csv,
    emit_commutation_json,
    emit_report_csv,
    emit_report_json,
    fit_decay_rate,
    load_report_json,
    run_scheme_one,
    run_scheme_two,
    series_l2_gap,
    series_l2_norm,
)
from fphom.pde_core import Grid
from fphom.scenario import FieldSpec, ScenarioConfig


def tiny_config(**kw):
    base = dict(
        n=3,
        resolution=16,
        eps_list=[0.5, 0.25],
        delta_list=[0.5, 0.1],
        eta_rule=EtaRule(c=1.0, p=2.5),
        shape=Ball(0.25),
        coefficient=CoefficientSpec(kind="constant", value=1.0),
        u0=FieldSpec(kind="expr", name="bump"),
        T=0.05,
        n_steps=20,
    )
    base.update(kw)
    return ScenarioConfig(**base)


def test_series_norms():
    g = Grid(shape=(9,), spacing=1.0 / 8)
    times = np.array([0.0, 1.0])
    ones = [np.ones(g.shape)] * 2
    assert series_l2_norm(g, times, ones) == pytest.approx(1.0)
    assert series_l2_gap(g, times, ones, [np.zeros(g.shape)] * 2) == pytest.approx(1.0)


def test_fit_decay_rate_exponential():
    t = np.linspace(0, 1, 200)
    m = 3.0 * np.exp(-2.5 * t)
    assert fit_decay_rate(t, m) == pytest.approx(2.5, rel=1e-8)


def test_scheme_one_report_structure():
    rep = run_scheme_one(tiny_config())
    assert len(rep.rows) == 2
    assert [r.value for r in rep.rows] == [0.5, 0.25]
    assert all(r.param == "eps" for r in rep.rows)
    assert rep.meta["target"] == "PD"
    # dropped sub-resolution inclusions leave the fine problem equal to the
    # target: both gaps at solver-noise level
    assert all(r.l2_gap < 1e-8 for r in rep.rows)
    assert all(abs(r.total_measure_gap) < 1e-10 for r in rep.rows)


def test_scheme_two_eta_zero_report():
    rep = run_scheme_two(tiny_config())
    sweeps = rep.sweeps()
    assert len(sweeps) == 2  # one per delta
    assert "delta_independence_gap" in rep.meta
    assert rep.meta["delta_independence_gap"] < 1e-8


def test_scheme_two_eta_one_report():
    cfg = tiny_config(eta_rule=EtaRule(c=1.0, p=0.0), delta_list=[0.5, 0.1])
    rep = run_scheme_two(cfg)
    lim = rep.sweep_rows("scheme2-eta1-deltalimit")
    assert [r.value for r in lim] == [0.5, 0.1]
    assert all(np.isfinite(r.v0_sup_l2) for r in lim)
    assert lim[1].v0_sup_l2 < lim[0].v0_sup_l2  # v0 shrinks with delta
    assert lim[1].weak_gap_max < lim[0].weak_gap_max  # -> F weakly


def test_report_emission_deterministic(tmp_path):
    rep = run_scheme_one(tiny_config())
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_report_csv(rep, p1)
    rep2 = run_scheme_one(tiny_config())
    emit_report_csv(rep2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    # header-only file for an empty report
    empty = ConvergenceReport()
    p3 = tmp_path / "empty.csv"
    emit_report_csv(empty, p3)
    assert p3.read_text().strip().count("\n") == 0


def test_report_json_round_trip(tmp_path):
    rep = run_scheme_one(tiny_config())
    p = tmp_path / "rep.json"
    emit_report_json(rep, p)
    back = load_report_json(p)
    assert json.dumps(back.to_json_dict(), sort_keys=True) == json.dumps(
        rep.to_json_dict(), sort_keys=True
    )


def test_report_schema_check():
    with pytest.raises(ValueError):
        ConvergenceReport.from_json_dict({"schema": "other", "rows": []})


def test_commutation_structure(tmp_path):
    cfg = tiny_config(T=0.25, n_steps=100, resolution=12, eps_list=[0.5], delta_list=[0.5, 1e-3])
    rows, meta = commutation_report(cfg, theta=3.14, k=2.0)
    regimes = [r.regime for r in rows]
    assert regimes == ["Subcritical", "Critical", "Supercritical", "ConstantEta"]
    sub = rows[0]
    assert sub.rel_gap == pytest.approx(0.0, abs=1e-14)
    assert sub.verdict == "commute"
    crit = rows[1]
    assert crit.rel_gap > sub.rel_gap
    assert crit.collapse_gap == pytest.approx(0.0, abs=1e-14)
    emit_commutation_csv(rows, tmp_path / "c.csv")
    emit_commutation_json(rows, meta, tmp_path / "c.json")
    data = json.loads((tmp_path / "c.json").read_text())
    assert data["schema"] == "fphom-commutation-v1"
    assert len(data["rows"]) == 4


def test_emit_dispatcher(tmp_path):
    from fphom.harness import emit

    rep = run_scheme_one(tiny_config())
    emit(rep, "csv", tmp_path / "r.csv")
    emit(rep, "json", tmp_path / "r.json")
    assert (tmp_path / "r.csv").exists() and (tmp_path / "r.json").exists()
    with pytest.raises(ValueError):
        emit(rep, "xml", tmp_path / "r.xml")
    with pytest.raises(OSError):
        emit(rep, "csv", tmp_path / "no_dir" / "r.csv")
    with pytest.raises(ValueError):
        emit(object(), "csv", tmp_path / "o.csv")

"""
Order of limits: a small sweep and the commutation table
========================================================

Scheme one (delta -> 0 first, then eps -> 0) and scheme two (homogenize at
fixed delta, then degenerate) agree in the subcritical and eta = 1 cases
and disagree in the critical and supercritical ones, where scheme one
produces the capacitary strange term or the frozen density.  This demo runs
the comparison at coarse desk scale; the full-size runs live in the
acceptance suite and the CLI.
"""

from fphom.cell import capacity_study
from fphom.coefficients import CoefficientSpec
from fphom.geometry import Ball, EtaRule
from fphom.harness import commutation_report, run_scheme_one
from fphom.scenario import FieldSpec, ScenarioConfig

cfg = ScenarioConfig(
    n=3, resolution=16, eps_list=[0.5, 0.25], delta_list=[0.1, 1e-3],
    eta_rule=EtaRule(c=1.0, p=2.5), shape=Ball(0.25),
    coefficient=CoefficientSpec(kind="constant", value=1.0),
    u0=FieldSpec(kind="expr", name="bump"), T=0.25, n_steps=100,
)

rep = run_scheme_one(cfg)
print("scheme one, subcritical rule eta = eps^2.5:")
for r in rep.rows:
    print(f"  eps={r.value:<5}: |u_eps - u0|_L2(QT) = {r.l2_gap:.2e}")

theta = capacity_study(cfg.shape).theta
rows, meta = commutation_report(cfg, theta=theta, k=2.0)
print(f"\ncommutation table (k^2 Theta = {meta['k2theta']:.3f}, delta_min = {meta['delta_min']:g}):")
print(f"  {'regime':<14} {'scheme 1':<10} {'scheme 2':<26} {'rel gap':<10} verdict")
for r in rows:
    print(f"  {r.regime:<14} {r.limit_scheme1:<10} {r.limit_scheme2:<26} {r.rel_gap:<10.4f} {r.verdict}")

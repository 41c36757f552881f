import { REPORT_COLUMNS } from "../schema";

export const REPORT_HEADER = REPORT_COLUMNS.join(",");

export function reportCsv(rows: string[][]): string {
  return [REPORT_HEADER, ...rows.map((r) => r.join(","))].join("\n") + "\n";
}

export const SCHEME1_ROWS = [
  ["scheme1-subcritical", "eps", "5e-1", "Subcritical", "1.2e-2", "1.0e-2", "9.5e-1", "3.0e-3", "1.0e-4", "nan", "nan", "nan"],
  ["scheme1-subcritical", "eps", "2.5e-1", "Subcritical", "4.0e-3", "3.5e-3", "9.4e-1", "1.0e-3", "5.0e-5", "nan", "nan", "nan"],
  ["scheme1-critical", "eps", "5e-1", "Critical", "1.3e-1", "9.7e-2", "8.0e-1", "4.0e-3", "3.8e-3", "5.687", "12.457", "nan"],
  ["scheme1-critical", "eps", "2.5e-1", "Critical", "2.4e-2", "1.9e-2", "7.9e-1", "3.8e-3", "3.8e-3", "13.504", "12.457", "nan"],
];

export const COMMUTATION_JSON = JSON.stringify({
  schema: "fphom-commutation-v1",
  rows: [
    { regime: "Subcritical", limit_scheme1: "PD", limit_scheme2: "PD", rel_gap: 0.0, collapse_gap: NaN, verdict: "commute", expected: "commute", match: true },
    { regime: "Critical", limit_scheme1: "DMD", limit_scheme2: "PD", rel_gap: 0.41, collapse_gap: 0.0, verdict: "do not commute", expected: "do not commute", match: true },
    { regime: "Supercritical", limit_scheme1: "AD", limit_scheme2: "PD", rel_gap: 0.22, collapse_gap: NaN, verdict: "do not commute", expected: "do not commute", match: true },
    { regime: "ConstantEta", limit_scheme1: "AD", limit_scheme2: "PD_delta(delta=0.001)->AD", rel_gap: 0.031, collapse_gap: NaN, verdict: "commute", expected: "commute", match: true },
  ],
  meta: { k: 2.0, theta: 3.1142, k2theta: 12.457, delta_min: 0.001, threshold: 0.1 },
});  // JSON.stringify maps NaN to null, matching the harness emitters

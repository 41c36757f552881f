// Markdown rendering of the commutation table and per-sweep summaries.

import { CommutationRow, ConvergenceReport, ReportRow, sweepsOf } from "./schema";

const REGIME_ORDER = ["Subcritical", "Critical", "Supercritical", "ConstantEta"];
const REGIME_LABEL: Record<string, string> = {
  Subcritical: "subcritical",
  Critical: "critical",
  Supercritical: "supercritical",
  ConstantEta: "eta = 1",
};

function fmt(v: number, digits = 4): string {
  if (Number.isNaN(v)) return "-";
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) return v.toExponential(2);
  return v.toFixed(digits);
}

/** Regime-by-scheme commutation table with measured verdicts; regimes where
 * the two limit orders agree are shown in bold, mirroring the summary-table
 * convention of highlighting the commuting columns. */
export function renderCommutationTable(rows: CommutationRow[]): string {
  const present = REGIME_ORDER.filter((r) => rows.some((x) => x.regime === r));
  const byRegime = new Map(rows.map((r) => [r.regime, r]));
  const cols = present.map((r) => REGIME_LABEL[r] ?? r);
  const line = (cells: string[]) => `| ${cells.join(" | ")} |\n`;
  let out = "";
  out += line(["", ...cols.map((c, i) => {
    const r = byRegime.get(present[i])!;
    return r.verdict === "commute" ? `**${c}**` : c;
  })]);
  out += line(["---", ...cols.map(() => "---")]);
  out += line([
    "scheme 1 limit",
    ...present.map((p) => byRegime.get(p)!.limit_scheme1),
  ]);
  out += line([
    "scheme 2 limit",
    ...present.map((p) => byRegime.get(p)!.limit_scheme2),
  ]);
  out += line([
    "relative gap",
    ...present.map((p) => fmt(byRegime.get(p)!.rel_gap)),
  ]);
  out += line([
    "verdict",
    ...present.map((p) => {
      const r = byRegime.get(p)!;
      return `${r.verdict}${r.match ? "" : " (UNEXPECTED)"}`;
    }),
  ]);
  return out;
}

export function renderSweepTable(rows: ReportRow[]): string {
  const line = (cells: string[]) => `| ${cells.join(" | ")} |\n`;
  let out = line(["param", "value", "L2 gap", "weak gap", "total-measure gap", "|u| L2"]);
  out += line(["---", "---", "---", "---", "---", "---"]);
  for (const r of rows) {
    out += line([
      r.param,
      fmt(r.value, 4),
      fmt(r.l2_gap),
      fmt(r.weak_gap_max),
      fmt(r.total_measure_gap),
      fmt(r.fine_l2_norm),
    ]);
  }
  return out;
}

export interface SummaryInput {
  commutation?: { rows: CommutationRow[]; meta: Record<string, unknown> };
  reports: Array<{ name: string; report: ConvergenceReport; figures: string[] }>;
  warnings: string[];
}

export function renderSummary(input: SummaryInput): string {
  let out = "# fphom run summary\n\n";
  if (input.commutation) {
    const meta = input.commutation.meta as any;
    out += "## Commutation of the degeneration and homogenization limits\n\n";
    out += renderCommutationTable(input.commutation.rows);
    out += "\n";
    if (meta && typeof meta.k2theta === "number") {
      out += `Capacitary coefficient k^2 Theta = ${fmt(meta.k2theta)} `;
      out += `(k = ${fmt(meta.k ?? NaN, 2)}, Theta = ${fmt(meta.theta ?? NaN)}); `;
      out += `smallest delta = ${meta.delta_min}.\n\n`;
    }
    const bold = input.commutation.rows.filter((r) => r.verdict === "commute");
    out += `Bold columns commute (${bold.map((r) => REGIME_LABEL[r.regime] ?? r.regime).join(", ")}).\n\n`;
  }
  for (const { name, report, figures } of input.reports) {
    out += `## ${name}\n\n`;
    for (const sweep of sweepsOf(report.rows)) {
      const rows = report.rows.filter((r) => r.sweep === sweep);
      out += `### ${sweep}\n\n`;
      out += renderSweepTable(rows);
      out += "\n";
    }
    for (const fig of figures) {
      out += `![${fig}](${fig})\n\n`;
    }
    const indep = (report.meta as any)?.delta_independence_gap;
    if (typeof indep === "number") {
      out += `Delta-independence gap at the finest resolved eps: ${fmt(indep)}.\n\n`;
    }
  }
  if (input.warnings.length > 0) {
    out += "## Warnings\n\n";
    for (const w of input.warnings) out += `- ${w}\n`;
    out += "\n";
  }
  return out;
}

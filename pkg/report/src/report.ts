// Orchestration: discover harness outputs in an input directory, render the
// markdown summary and the per-sweep figures.  Inputs are read-only and the
// outputs are pure functions of them, so reruns are byte-identical.

import * as fs from "node:fs";
import * as path from "node:path";

import { renderSummary, SummaryInput } from "./markdown";
import {
  ConvergenceReport,
  loadCommutationJson,
  loadReportCsv,
  loadReportJson,
  sweepsOf,
} from "./schema";
import { decayOverlay, logLogPlot, Series } from "./svg";

export interface GeneratedFile {
  name: string;
  content: string;
}

export function figuresForReport(name: string, report: ConvergenceReport): GeneratedFile[] {
  const figs: GeneratedFile[] = [];
  for (const sweep of sweepsOf(report.rows)) {
    const rows = report.rows.filter((r) => r.sweep === sweep);
    if (rows.length === 0) continue;
    const param = rows[0].param;
    const series: Series[] = [];
    const gap = rows.filter((r) => !Number.isNaN(r.l2_gap));
    if (gap.length > 0) {
      series.push({ label: "L2 gap", points: gap.map((r) => ({ x: r.value, y: r.l2_gap })) });
    }
    const weak = rows.filter((r) => !Number.isNaN(r.weak_gap_max));
    if (weak.length > 0) {
      series.push({
        label: "weak-test gap",
        points: weak.map((r) => ({ x: r.value, y: r.weak_gap_max })),
        dashed: true,
      });
    }
    const vsup = rows.filter((r) => !Number.isNaN(r.v0_sup_l2));
    if (vsup.length > 0) {
      series.push({
        label: "sup-t |v0|",
        points: vsup.map((r) => ({ x: r.value, y: r.v0_sup_l2 })),
      });
    }
    if (series.length === 0) continue;
    figs.push({
      name: `fig_${name}_${sweep}.svg`,
      content: logLogPlot(`${sweep}`, param, "gap", series),
    });
    // critical sweeps carry a fitted zeroth-order rate: overlay the decay
    // against the k^2 Theta reference recomputed from the report metadata
    const fitted = rows.filter(
      (r) => !Number.isNaN(r.fitted_rate) && !Number.isNaN(r.expected_rate)
    );
    if (fitted.length > 0) {
      const last = fitted[fitted.length - 1];
      const T = Number((report.meta as any)?.config?.T ?? 0.25);
      figs.push({
        name: `fig_${name}_${sweep}_decay.svg`,
        content: decayOverlay(
          `${sweep}: bulk decay at ${param} = ${last.value}`,
          T,
          [
            { label: `fitted rate ${last.fitted_rate.toFixed(3)}`, rate: last.fitted_rate },
            {
              label: `k^2 Theta / M = ${last.expected_rate.toFixed(3)}`,
              rate: last.expected_rate,
              dashed: true,
            },
          ]
        ),
      });
    }
  }
  return figs;
}

export interface RunResult {
  files: GeneratedFile[];
  warnings: string[];
}

export function buildReport(inDir: string): RunResult {
  const warnings: string[] = [];
  const summary: SummaryInput = { reports: [], warnings };
  const files: GeneratedFile[] = [];

  const commPath = path.join(inDir, "commutation.json");
  if (fs.existsSync(commPath)) {
    summary.commutation = loadCommutationJson(fs.readFileSync(commPath, "utf8"));
  }

  for (const base of ["scheme1", "scheme2"]) {
    const jsonPath = path.join(inDir, `${base}.json`);
    const csvPath = path.join(inDir, `${base}.csv`);
    let report: ConvergenceReport | undefined;
    if (fs.existsSync(jsonPath)) {
      report = loadReportJson(fs.readFileSync(jsonPath, "utf8"));
    } else if (fs.existsSync(csvPath)) {
      report = { rows: loadReportCsv(fs.readFileSync(csvPath, "utf8")), meta: {} };
    }
    if (!report) continue;
    if (report.rows.length === 0) {
      warnings.push(`${base}: empty report, no figure emitted`);
      summary.reports.push({ name: base, report, figures: [] });
      continue;
    }
    const figs = figuresForReport(base, report);
    files.push(...figs);
    summary.reports.push({ name: base, report, figures: figs.map((f) => f.name) });
  }

  if (!summary.commutation && summary.reports.length === 0) {
    throw new Error(`no harness outputs found in ${inDir}`);
  }
  files.unshift({ name: "report.md", content: renderSummary(summary) });
  return { files, warnings };
}

export function writeReport(inDir: string, outDir: string): RunResult {
  const result = buildReport(inDir);
  fs.mkdirSync(outDir, { recursive: true });
  for (const f of result.files) {
    fs.writeFileSync(path.join(outDir, f.name), f.content);
  }
  return result;
}

// Schemas of the harness outputs.  Loading fails loudly on unknown headers
// or schema tags so silent format drift cannot slip through.

import { parseCsv, toTable } from "./csv";

export const REPORT_COLUMNS = [
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
] as const;

export const REPORT_SCHEMA = "fphom-report-v1";
export const COMMUTATION_SCHEMA = "fphom-commutation-v1";

export interface ReportRow {
  sweep: string;
  param: string;
  value: number;
  regime: string;
  l2_gap: number;
  l2_gap_outer: number;
  fine_l2_norm: number;
  weak_gap_max: number;
  total_measure_gap: number;
  fitted_rate: number;
  expected_rate: number;
  v0_sup_l2: number;
}

export interface ConvergenceReport {
  rows: ReportRow[];
  meta: Record<string, unknown>;
}

export interface CommutationRow {
  regime: string;
  limit_scheme1: string;
  limit_scheme2: string;
  rel_gap: number;
  collapse_gap: number;
  verdict: string;
  expected: string;
  match: boolean;
}

export class SchemaError extends Error {}

function num(s: string): number {
  if (s === "nan" || s === "") return NaN;
  const v = Number(s);
  if (Number.isNaN(v) && s !== "nan") throw new SchemaError(`not a number: ${JSON.stringify(s)}`);
  return v;
}

export function loadReportCsv(text: string): ReportRow[] {
  const { header, records } = toTable(parseCsv(text));
  const expected = REPORT_COLUMNS as readonly string[];
  if (header.length !== expected.length || header.some((h, i) => h !== expected[i])) {
    throw new SchemaError(
      `unknown report CSV header [${header.join(",")}]; expected [${expected.join(",")}]`
    );
  }
  return records.map((r) => ({
    sweep: r.sweep,
    param: r.param,
    value: num(r.value),
    regime: r.regime,
    l2_gap: num(r.l2_gap),
    l2_gap_outer: num(r.l2_gap_outer),
    fine_l2_norm: num(r.fine_l2_norm),
    weak_gap_max: num(r.weak_gap_max),
    total_measure_gap: num(r.total_measure_gap),
    fitted_rate: num(r.fitted_rate),
    expected_rate: num(r.expected_rate),
    v0_sup_l2: num(r.v0_sup_l2),
  }));
}

export function loadReportJson(text: string): ConvergenceReport {
  let data: any;
  try {
    data = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`corrupted report JSON: ${(e as Error).message}`);
  }
  if (data.schema !== REPORT_SCHEMA) {
    throw new SchemaError(`unknown report schema ${JSON.stringify(data.schema)}`);
  }
  return { rows: data.rows as ReportRow[], meta: data.meta ?? {} };
}

export function loadCommutationJson(text: string): { rows: CommutationRow[]; meta: Record<string, unknown> } {
  let data: any;
  try {
    data = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`corrupted commutation JSON: ${(e as Error).message}`);
  }
  if (data.schema !== COMMUTATION_SCHEMA) {
    throw new SchemaError(`unknown commutation schema ${JSON.stringify(data.schema)}`);
  }
  if (!Array.isArray(data.rows)) throw new SchemaError("commutation JSON carries no rows");
  return { rows: data.rows as CommutationRow[], meta: data.meta ?? {} };
}

export function sweepsOf(rows: ReportRow[]): string[] {
  const seen: string[] = [];
  for (const r of rows) if (!seen.includes(r.sweep)) seen.push(r.sweep);
  return seen;
}

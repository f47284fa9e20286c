/** Readers and validators for the harness output files.
 *
 * The renderer never recomputes statistics from raw data; it only bins values
 * for histograms. Schema violations raise SchemaError naming the offending
 * column or field.
 */

import { readFileSync } from "fs";

import { Aggregate, RegretCurve, SchemaError } from "./types";

export const CSV_HEADER =
  "rep,t,arm,loss_observed,loss_true,regret_running,x_snapshot_json";

function need(cond: boolean, what: string): void {
  if (!cond) throw new SchemaError(`aggregate schema mismatch: ${what}`);
}

export function loadAggregate(path: string): Aggregate {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new SchemaError(`cannot read aggregate ${path}: ${(err as Error).message}`);
  }
  const agg = parsed as Aggregate;
  need(typeof agg === "object" && agg !== null, "root is not an object");
  for (const key of [
    "config_echo",
    "per_arm",
    "coverage_by_level",
    "ks",
    "regret",
    "stability",
  ]) {
    need(key in agg, `missing key "${key}"`);
  }
  need(Array.isArray(agg.per_arm), `"per_arm" is not an array`);
  need(typeof agg.config_echo.T === "number", `missing field "config_echo.T"`);
  need(typeof agg.config_echo.K === "number", `missing field "config_echo.K"`);
  agg.per_arm.forEach((entry, i) => {
    for (const key of ["arm", "mu_true", "pulls_per_rep", "std_errors"]) {
      need(key in entry, `missing column "per_arm[${i}].${key}"`);
    }
  });
  agg.ks.forEach((entry, i) => {
    for (const key of ["arm", "D", "n_used", "n_excluded"]) {
      need(key in entry, `missing column "ks[${i}].${key}"`);
    }
  });
  need(Array.isArray(agg.regret.per_rep), `missing column "regret.per_rep"`);
  return agg;
}

export function repCount(agg: Aggregate): number {
  return agg.regret.per_rep.length;
}

/** Split one CSV row of the pinned schema. Only the last column may be
 * quoted (it holds JSON with commas), so the first six commas delimit. */
function splitRow(line: string, lineno: number): string[] {
  const fields: string[] = [];
  let pos = 0;
  for (let i = 0; i < 6; i++) {
    const comma = line.indexOf(",", pos);
    if (comma < 0) {
      throw new SchemaError(
        `runs.csv row ${lineno}: expected 7 columns, found ${fields.length + 1}`,
      );
    }
    fields.push(line.slice(pos, comma));
    pos = comma + 1;
  }
  let last = line.slice(pos);
  if (last.startsWith('"') && last.endsWith('"')) {
    last = last.slice(1, -1).replace(/""/g, '"');
  }
  fields.push(last);
  return fields;
}

/** Fold runs.csv into the mean/sd running-regret curve over reps. */
export function loadRegretCurve(path: string): RegretCurve {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new SchemaError(`cannot read rows ${path}: ${(err as Error).message}`);
  }
  const lines = text.split("\n");
  if (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0 || lines[0] !== CSV_HEADER) {
    throw new SchemaError(
      `runs.csv schema mismatch: header is ${JSON.stringify(lines[0] ?? "")}, ` +
        `expected ${JSON.stringify(CSV_HEADER)}`,
    );
  }
  const sum = new Map<number, number>();
  const sumsq = new Map<number, number>();
  const count = new Map<number, number>();
  const reps = new Set<string>();
  for (let i = 1; i < lines.length; i++) {
    const f = splitRow(lines[i], i + 1);
    const t = Number(f[1]);
    const r = Number(f[5]);
    if (!Number.isFinite(t) || !Number.isFinite(r)) {
      throw new SchemaError(
        `runs.csv row ${i + 1}: non-numeric "t" or "regret_running"`,
      );
    }
    reps.add(f[0]);
    sum.set(t, (sum.get(t) ?? 0) + r);
    sumsq.set(t, (sumsq.get(t) ?? 0) + r * r);
    count.set(t, (count.get(t) ?? 0) + 1);
  }
  if (reps.size === 0) throw new SchemaError("runs.csv holds no data rows");
  const ts = [...sum.keys()].sort((a, b) => a - b);
  const mean = ts.map((t) => sum.get(t)! / count.get(t)!);
  const sd = ts.map((t, i) => {
    const m = mean[i];
    return Math.sqrt(Math.max(0, sumsq.get(t)! / count.get(t)! - m * m));
  });
  return { t: ts, mean, sd, reps: reps.size };
}

export interface Histogram {
  edges: number[];
  density: number[];
  n: number;
}

function quantile(sorted: number[], q: number): number {
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

/** Freedman-Diaconis binning (bin width 2*IQR/n^(1/3)), with a square-root
 * fallback when the IQR degenerates. */
export function histogram(values: number[]): Histogram {
  if (values.length === 0) throw new SchemaError("cannot bin an empty sample");
  const sorted = [...values].sort((a, b) => a - b);
  const n = sorted.length;
  const lo = sorted[0];
  const hi = sorted[n - 1];
  if (lo === hi) {
    return { edges: [lo - 0.5, lo + 0.5], density: [1.0], n };
  }
  const iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  let width = (2 * iqr) / Math.cbrt(n);
  if (!(width > 0)) width = (hi - lo) / Math.ceil(Math.sqrt(n));
  const bins = Math.max(1, Math.min(200, Math.ceil((hi - lo) / width)));
  const edges: number[] = [];
  for (let i = 0; i <= bins; i++) edges.push(lo + ((hi - lo) * i) / bins);
  const counts = new Array(bins).fill(0);
  for (const v of sorted) {
    let b = Math.floor(((v - lo) / (hi - lo)) * bins);
    if (b === bins) b = bins - 1;
    counts[b] += 1;
  }
  const binWidth = (hi - lo) / bins;
  return { edges, density: counts.map((c) => c / (n * binWidth)), n };
}

export function normalPdf(x: number): number {
  return Math.exp(-0.5 * x * x) / Math.sqrt(2 * Math.PI);
}

/** The four figure builders. Each returns the SVG text plus the exact data
 * series it plotted, so tests can pin what was drawn without parsing SVG. */

import { histogram, normalPdf, repCount } from "./data";
import {
  PALETTE,
  Panel,
  axes,
  circle,
  document as svgDocument,
  fmt,
  label,
  panel,
  polygon,
  polyline,
  vbar,
} from "./svg";
import { Aggregate, RegretCurve, SchemaError } from "./types";

export interface BuiltFigure {
  svg: string;
  series: unknown;
}

const PANEL_W = 260;
const PANEL_H = 210;
const MARGIN_L = 64;
const MARGIN_R = 24;
const MARGIN_T = 40;
const MARGIN_B = 56;
const GAP = 36;

function resolveArms(agg: Aggregate, arms?: number[]): number[] {
  const K = agg.per_arm.length;
  const chosen = arms && arms.length ? arms : agg.per_arm.map((e) => e.arm);
  for (const a of chosen) {
    if (!Number.isInteger(a) || a < 0 || a >= K) {
      throw new SchemaError(`arm selection ${a} outside 0..${K - 1}`);
    }
  }
  return chosen;
}

function grid(n: number): { width: number; height: number; lefts: number[] } {
  const lefts: number[] = [];
  for (let i = 0; i < n; i++) lefts.push(MARGIN_L + i * (PANEL_W + GAP));
  return {
    width: MARGIN_L + n * PANEL_W + (n - 1) * GAP + MARGIN_R,
    height: MARGIN_T + PANEL_H + MARGIN_B,
    lefts,
  };
}

/** Histogram of per-rep standardized errors per arm, with the standard
 * normal density overlaid and the harness-computed KS distance annotated. */
export function stdErrorDensity(agg: Aggregate, armSel?: number[]): BuiltFigure {
  if (repCount(agg) === 0) throw new SchemaError("empty rep set: nothing to plot");
  const arms = resolveArms(agg, armSel);
  const { width, height, lefts } = grid(arms.length);
  const parts: string[] = [];
  const series: Record<string, unknown>[] = [];
  arms.forEach((a, i) => {
    const entry = agg.per_arm[a];
    const values = entry.std_errors.filter((v): v is number => v !== null);
    if (values.length === 0) {
      throw new SchemaError(`arm ${a} has no usable standardized errors`);
    }
    const hist = histogram(values);
    const ks = agg.ks[a];
    const xLo = Math.min(-4, hist.edges[0]);
    const xHi = Math.max(4, hist.edges[hist.edges.length - 1]);
    const yHi = Math.max(0.45, ...hist.density) * 1.1;
    const p: Panel = panel(lefts[i], MARGIN_T, PANEL_W, PANEL_H, [xLo, xHi], [0, yHi]);
    for (let b = 0; b < hist.density.length; b++) {
      vbar(p, hist.edges[b], hist.edges[b + 1], hist.density[b], "#9ecae1");
    }
    const xs: number[] = [];
    const ys: number[] = [];
    for (let x = xLo; x <= xHi + 1e-9; x += (xHi - xLo) / 160) {
      xs.push(x);
      ys.push(normalPdf(x));
    }
    polyline(p, xs, ys, "#000000", 'stroke-width="1.5"');
    axes(p, "standardized error", i === 0 ? "density" : "", `arm ${a}`);
    label(p, xLo + 0.04 * (xHi - xLo), yHi * 0.95, `KS D = ${ks.D}`, "#333333", 10);
    label(
      p,
      xLo + 0.04 * (xHi - xLo),
      yHi * 0.88,
      `n = ${ks.n_used}, excluded = ${ks.n_excluded}`,
      "#333333",
      9,
    );
    parts.push(...p.parts);
    series.push({ arm: a, hist, ks_annotated: ks.D });
  });
  return { svg: svgDocument(width, height, parts), series };
}

/** Empirical coverage against the nominal level, per arm, with the
 * diagonal reference and a binomial standard-error band around it. */
export function coverageDiagonal(agg: Aggregate, armSel?: number[]): BuiltFigure {
  const reps = repCount(agg);
  if (reps === 0) throw new SchemaError("empty rep set: nothing to plot");
  const arms = resolveArms(agg, armSel);
  const levels = Object.keys(agg.coverage_by_level)
    .map(Number)
    .sort((a, b) => a - b);
  if (levels.length === 0) {
    throw new SchemaError(`missing column "coverage_by_level": no levels present`);
  }
  const lo = Math.max(0, Math.min(...levels) - 0.05);
  const hi = Math.min(1, Math.max(...levels) + 0.05);
  const width = MARGIN_L + 420 + MARGIN_R;
  const height = MARGIN_T + 320 + MARGIN_B;
  const p = panel(MARGIN_L, MARGIN_T, 420, 320, [lo, hi], [lo, hi]);

  const bandX = [...levels, ...[...levels].reverse()];
  const bandY = [
    ...levels.map((l) => Math.min(1, l + 1.96 * Math.sqrt((l * (1 - l)) / reps))),
    ...[...levels].reverse().map((l) => Math.max(0, l - 1.96 * Math.sqrt((l * (1 - l)) / reps))),
  ];
  polygon(p, bandX, bandY, "rgba(120,120,120,0.18)");
  polyline(p, [lo, hi], [lo, hi], "#000000", 'stroke-width="1" stroke-dasharray="5,4"');

  const series: Record<string, unknown>[] = [];
  arms.forEach((a, i) => {
    const pts: [number, number][] = [];
    for (const l of levels) {
      const cov = agg.coverage_by_level[String(l)].per_arm[a];
      if (cov === null || cov === undefined) continue;
      pts.push([l, cov]);
    }
    if (pts.length === 0) throw new SchemaError(`arm ${a} has no coverage values`);
    const color = PALETTE[i % PALETTE.length];
    polyline(p, pts.map((q) => q[0]), pts.map((q) => q[1]), color, 'stroke-width="1.2"');
    for (const [x, y] of pts) circle(p, x, y, 3, color);
    label(p, lo + 0.02 * (hi - lo), hi - (0.05 + 0.045 * i) * (hi - lo), `arm ${a}`, color, 10);
    series.push({ arm: a, points: pts });
  });
  axes(p, "nominal level", "empirical coverage", `coverage over ${reps} replications`);
  return { svg: svgDocument(width, height, p.parts), series };
}

/** Histogram of per-rep pull proportions per arm, with the deterministic
 * per-round anchor share (n-star over T) marked. */
export function pullProportions(agg: Aggregate, armSel?: number[]): BuiltFigure {
  if (repCount(agg) === 0) throw new SchemaError("empty rep set: nothing to plot");
  const arms = resolveArms(agg, armSel);
  const T = agg.config_echo.T;
  const nStar = agg.stability.n_star;
  const { width, height, lefts } = grid(arms.length);
  const parts: string[] = [];
  const series: Record<string, unknown>[] = [];
  arms.forEach((a, i) => {
    const shares = agg.per_arm[a].pulls_per_rep.map((n) => n / T);
    const hist = histogram(shares);
    const anchor = nStar ? nStar[a] / T : null;
    const spread = hist.edges[hist.edges.length - 1] - hist.edges[0];
    const xLo = Math.max(0, hist.edges[0] - 0.15 * spread - 0.01);
    const xHi = Math.min(1, hist.edges[hist.edges.length - 1] + 0.15 * spread + 0.01);
    const yHi = Math.max(...hist.density) * 1.15;
    const p = panel(lefts[i], MARGIN_T, PANEL_W, PANEL_H, [xLo, xHi], [0, yHi]);
    for (let b = 0; b < hist.density.length; b++) {
      vbar(p, hist.edges[b], hist.edges[b + 1], hist.density[b], "#a1d99b");
    }
    if (anchor !== null && anchor >= xLo && anchor <= xHi) {
      polyline(p, [anchor, anchor], [0, yHi], "#d62728", 'stroke-width="1.5" stroke-dasharray="4,3"');
      label(p, anchor, yHi * 0.97, ` n*/T = ${fmt(anchor)}`, "#d62728", 9);
    }
    axes(p, "pull proportion", i === 0 ? "density" : "", `arm ${a}`);
    parts.push(...p.parts);
    series.push({ arm: a, hist, anchor });
  });
  return { svg: svgDocument(width, height, parts), series };
}

/** Mean running pseudo-regret over replications with a +-1 sd band. */
export function regretCurve(curve: RegretCurve): BuiltFigure {
  if (curve.t.length === 0) throw new SchemaError("empty rep set: nothing to plot");
  const upper = curve.mean.map((m, i) => m + curve.sd[i]);
  const lower = curve.mean.map((m, i) => m - curve.sd[i]);
  const yHi = Math.max(...upper) * 1.05 || 1;
  const width = MARGIN_L + 460 + MARGIN_R;
  const height = MARGIN_T + 300 + MARGIN_B;
  const p = panel(
    MARGIN_L, MARGIN_T, 460, 300,
    [curve.t[0], curve.t[curve.t.length - 1]],
    [0, yHi],
  );
  polygon(
    p,
    [...curve.t, ...[...curve.t].reverse()],
    [...upper, ...[...lower].reverse()],
    "rgba(31,119,180,0.2)",
  );
  polyline(p, curve.t, curve.mean, "#1f77b4", 'stroke-width="1.6"');
  axes(p, "round", "running pseudo-regret", `mean over ${curve.reps} replications (band: +-1 sd)`);
  return {
    svg: svgDocument(width, height, p.parts),
    series: { t: curve.t, mean: curve.mean, sd: curve.sd },
  };
}

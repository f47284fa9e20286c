/** Spec-driven rendering: validate, build the SVG, rasterize to PNG.
 *
 * All reading and validation happens before the first byte is written, so a
 * failed render leaves no files behind. Inputs are opened read-only and
 * rendering embeds nothing besides the data (no timestamps), so re-rendering
 * the same inputs reproduces identical bytes.
 */

import { writeFileSync } from "fs";

import { Resvg } from "@resvg/resvg-js";

import { loadAggregate, loadRegretCurve } from "./data";
import {
  BuiltFigure,
  coverageDiagonal,
  pullProportions,
  regretCurve,
  stdErrorDensity,
} from "./figures";
import { FigureSpec, SchemaError } from "./types";

const KINDS = new Set([
  "std-error-density",
  "coverage-diagonal",
  "pull-proportions",
  "regret-curve",
]);

export function validateSpec(raw: unknown): FigureSpec {
  if (typeof raw !== "object" || raw === null) {
    throw new SchemaError("figure spec must be a JSON object");
  }
  const spec = raw as FigureSpec;
  if (!KINDS.has(spec.kind)) {
    throw new SchemaError(
      `unknown figure kind ${JSON.stringify(spec.kind)}; expected one of ${[...KINDS].join(", ")}`,
    );
  }
  if (typeof spec.aggregate !== "string") {
    throw new SchemaError(`missing field "aggregate" (path to aggregate.json)`);
  }
  if (typeof spec.out !== "string" || spec.out.length === 0) {
    throw new SchemaError(`missing field "out" (output base path)`);
  }
  if (spec.kind === "regret-curve" && typeof spec.rows !== "string") {
    throw new SchemaError(`figure kind "regret-curve" needs field "rows" (path to runs.csv)`);
  }
  return spec;
}

export function buildFigure(spec: FigureSpec): BuiltFigure {
  const agg = loadAggregate(spec.aggregate);
  switch (spec.kind) {
    case "std-error-density":
      return stdErrorDensity(agg, spec.arms);
    case "coverage-diagonal":
      return coverageDiagonal(agg, spec.arms);
    case "pull-proportions":
      return pullProportions(agg, spec.arms);
    case "regret-curve":
      return regretCurve(loadRegretCurve(spec.rows!));
  }
}

export interface RenderResult {
  svgPath: string;
  pngPath: string;
  series: unknown;
}

export function render(spec: FigureSpec): RenderResult {
  const built = buildFigure(spec);
  const png = new Resvg(built.svg, {
    fitTo: { mode: "zoom", value: 2 },
    font: { loadSystemFonts: true },
  })
    .render()
    .asPng();
  const svgPath = `${spec.out}.svg`;
  const pngPath = `${spec.out}.png`;
  writeFileSync(svgPath, built.svg, "utf-8");
  writeFileSync(pngPath, png);
  return { svgPath, pngPath, series: built.series };
}

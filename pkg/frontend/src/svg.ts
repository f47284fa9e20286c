/** Tiny deterministic SVG plot kit: scales, axes, marks. No timestamps, no
 * randomness — identical inputs give identical bytes. */

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linear(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

/** Round-numbered tick positions covering [lo, hi]. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const norm = rawStep / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : Number(v.toPrecision(12)));
  }
  return out;
}

export function fmt(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e15) return String(v);
  return String(Number(v.toPrecision(6)));
}

const FONT = "DejaVu Sans, sans-serif";

export interface Panel {
  x: Scale;
  y: Scale;
  parts: string[];
}

export function panel(
  left: number,
  top: number,
  width: number,
  height: number,
  xdom: [number, number],
  ydom: [number, number],
): Panel {
  return {
    x: linear(xdom, [left, left + width]),
    y: linear(ydom, [top + height, top]),
    parts: [],
  };
}

export function axes(p: Panel, xlabel: string, ylabel: string, title = ""): void {
  const [x0, x1] = p.x.range;
  const [y1, y0] = p.y.range; // y range is inverted
  p.parts.push(
    `<line x1="${x0}" y1="${y1}" x2="${x1}" y2="${y1}" stroke="black" stroke-width="1"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black" stroke-width="1"/>`,
  );
  for (const t of ticks(p.x.domain[0], p.x.domain[1])) {
    const px = p.x(t);
    p.parts.push(
      `<line x1="${px}" y1="${y1}" x2="${px}" y2="${y1 + 4}" stroke="black" stroke-width="1"/>`,
      `<text x="${px}" y="${y1 + 16}" font-family="${FONT}" font-size="10" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(p.y.domain[0], p.y.domain[1])) {
    const py = p.y(t);
    p.parts.push(
      `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="black" stroke-width="1"/>`,
      `<text x="${x0 - 6}" y="${py + 3}" font-family="${FONT}" font-size="10" text-anchor="end">${fmt(t)}</text>`,
    );
  }
  const cx = (x0 + x1) / 2;
  p.parts.push(
    `<text x="${cx}" y="${y1 + 32}" font-family="${FONT}" font-size="11" text-anchor="middle">${xlabel}</text>`,
    `<text x="${x0 - 40}" y="${(y0 + y1) / 2}" font-family="${FONT}" font-size="11" text-anchor="middle" transform="rotate(-90 ${x0 - 40} ${(y0 + y1) / 2})">${ylabel}</text>`,
  );
  if (title) {
    p.parts.push(
      `<text x="${cx}" y="${y0 - 8}" font-family="${FONT}" font-size="12" font-weight="bold" text-anchor="middle">${title}</text>`,
    );
  }
}

export function polyline(
  p: Panel,
  xs: number[],
  ys: number[],
  stroke: string,
  opts = "",
): void {
  const pts = xs.map((x, i) => `${p.x(x)},${p.y(ys[i])}`).join(" ");
  p.parts.push(`<polyline points="${pts}" fill="none" stroke="${stroke}" ${opts}/>`);
}

export function polygon(p: Panel, xs: number[], ys: number[], fill: string): void {
  const pts = xs.map((x, i) => `${p.x(x)},${p.y(ys[i])}`).join(" ");
  p.parts.push(`<polygon points="${pts}" fill="${fill}" stroke="none"/>`);
}

export function vbar(p: Panel, x0: number, x1: number, y: number, fill: string): void {
  const left = p.x(x0);
  const width = p.x(x1) - left;
  const top = p.y(y);
  const bottom = p.y(0);
  p.parts.push(
    `<rect x="${left}" y="${top}" width="${width}" height="${bottom - top}" fill="${fill}" stroke="white" stroke-width="0.5"/>`,
  );
}

export function circle(p: Panel, x: number, y: number, r: number, fill: string): void {
  p.parts.push(`<circle cx="${p.x(x)}" cy="${p.y(y)}" r="${r}" fill="${fill}"/>`);
}

export function label(
  p: Panel,
  x: number,
  y: number,
  text: string,
  color = "black",
  size = 10,
  extra = "",
): void {
  p.parts.push(
    `<text x="${p.x(x)}" y="${p.y(y)}" font-family="${FONT}" font-size="${size}" fill="${color}" ${extra}>${text}</text>`,
  );
}

export function document(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...body,
    "</svg>",
  ].join("\n");
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

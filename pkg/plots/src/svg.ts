/**
 * Shared SVG scaffolding for the figure scripts.
 *
 * Everything here is deterministic: fixed 1200x800 canvas, fixed
 * margins, fixed palette, tick positions derived only from the data
 * range. Rendering the same rows twice yields byte-identical output.
 */

export const WIDTH = 1200;
export const HEIGHT = 800;

export const MARGIN = { top: 60, right: 40, bottom: 70, left: 90 };

export const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
export const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export const COLORS = {
  main: "#1f6fb2",
  baseline: "#c46a1f",
  grid: "#d8d8d8",
  axis: "#333333",
  text: "#222222",
};

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Fixed-notation coordinate, short enough to keep files small. */
export function fmt(v: number): string {
  return v.toFixed(2).replace(/\.00$/, "");
}

/** Tick label: trims trailing zeros without switching to exponent soup. */
export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-4) return v.toExponential(1);
  return parseFloat(v.toPrecision(6)).toString();
}

/** Round-number ticks covering [lo, hi], roughly `want` of them. */
export function niceTicks(lo: number, hi: number, want: number): number[] {
  if (!(hi > lo)) {
    // degenerate range: pad around the single value
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    return niceTicks(lo - pad, lo + pad, want);
  }
  const raw = (hi - lo) / Math.max(want, 2);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

export interface Scale {
  lo: number;
  hi: number;
  apply(v: number): number;
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    lo -= pad;
    hi += pad;
  }
  const k = (outHi - outLo) / (hi - lo);
  return { lo, hi, apply: (v: number) => outLo + (v - lo) * k };
}

export interface LegendEntry {
  label: string;
  color: string;
}

/**
 * Grid, axes, tick marks and labels, axis titles, title, legend.
 * The caller appends its own marks between frameOpen and frameClose.
 */
export function frameOpen(
  title: string,
  xLabel: string,
  yLabel: string,
  xs: Scale,
  ys: Scale,
  legend: LegendEntry[],
): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `width="${WIDTH}" height="${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="34" text-anchor="middle" font-size="22" ` +
      `fill="${COLORS.text}">${esc(title)}</text>`,
  );

  const xTicks = niceTicks(xs.lo, xs.hi, 8);
  const yTicks = niceTicks(ys.lo, ys.hi, 8);
  const bottom = MARGIN.top + PLOT_H;
  const right = MARGIN.left + PLOT_W;

  parts.push(`<g id="grid" stroke="${COLORS.grid}" stroke-width="1">`);
  for (const t of xTicks) {
    const x = fmt(xs.apply(t));
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${bottom}"/>`);
  }
  for (const t of yTicks) {
    const y = fmt(ys.apply(t));
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${right}" y2="${y}"/>`);
  }
  parts.push("</g>");

  parts.push(`<g id="axes" stroke="${COLORS.axis}" stroke-width="1.5">`);
  parts.push(`<line x1="${MARGIN.left}" y1="${bottom}" x2="${right}" y2="${bottom}"/>`);
  parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${bottom}"/>`);
  parts.push("</g>");

  parts.push(`<g id="tick-labels" font-size="14" fill="${COLORS.text}">`);
  for (const t of xTicks) {
    const x = fmt(xs.apply(t));
    parts.push(
      `<text x="${x}" y="${bottom + 22}" text-anchor="middle">${esc(tickLabel(t))}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = fmt(ys.apply(t));
    parts.push(
      `<text x="${MARGIN.left - 10}" y="${y}" text-anchor="end" ` +
        `dominant-baseline="middle">${esc(tickLabel(t))}</text>`,
    );
  }
  parts.push("</g>");

  parts.push(
    `<text x="${MARGIN.left + PLOT_W / 2}" y="${HEIGHT - 18}" text-anchor="middle" ` +
      `font-size="17" fill="${COLORS.text}">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="26" y="${MARGIN.top + PLOT_H / 2}" text-anchor="middle" font-size="17" ` +
      `fill="${COLORS.text}" transform="rotate(-90 26 ${MARGIN.top + PLOT_H / 2})">` +
      `${esc(yLabel)}</text>`,
  );

  if (legend.length > 0) {
    parts.push(`<g id="legend" font-size="15">`);
    legend.forEach((entry, i) => {
      const y = MARGIN.top + 14 + i * 26;
      const x = right - 230;
      parts.push(`<rect x="${x}" y="${y - 11}" width="18" height="14" fill="${entry.color}"/>`);
      parts.push(
        `<text x="${x + 26}" y="${y}" fill="${COLORS.text}">${esc(entry.label)}</text>`,
      );
    });
    parts.push("</g>");
  }

  return parts.join("\n");
}

export function frameClose(): string {
  return "</svg>\n";
}

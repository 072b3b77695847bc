/**
 * Figure builders. Each takes already-parsed rows plus a FigureSpec and
 * returns the complete SVG document as a string; file IO and flag
 * handling stay in the CLI entry points.
 */

import { FigureSpec, HistBucket, ScatterRow } from "./csv.js";
import {
  COLORS,
  MARGIN,
  PLOT_H,
  PLOT_W,
  Scale,
  fmt,
  frameClose,
  frameOpen,
  linearScale,
} from "./svg.js";

// cap per series; every k-th row at a fixed stride, so re-runs are identical
const MAX_POINTS = 20000;

interface Point {
  x: number;
  y: number;
}

function toPoints(rows: ScatterRow[], signed: boolean): Point[] {
  const pts = rows.map((r) =>
    signed ? { x: r.r1, y: r.r2 } : { x: Math.abs(r.r1), y: Math.abs(r.r2) },
  );
  if (pts.length <= MAX_POINTS) return pts;
  const stride = Math.ceil(pts.length / MAX_POINTS);
  return pts.filter((_, i) => i % stride === 0);
}

function extent(series: Point[][]): { lo: number; hi: number }[] {
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const pts of series) {
    for (const p of pts) {
      if (p.x < xLo) xLo = p.x;
      if (p.x > xHi) xHi = p.x;
      if (p.y < yLo) yLo = p.y;
      if (p.y > yHi) yHi = p.y;
    }
  }
  const padX = (xHi - xLo) * 0.04 || 1;
  const padY = (yHi - yLo) * 0.04 || 1;
  return [
    { lo: xLo - padX, hi: xHi + padX },
    { lo: yLo - padY, hi: yHi + padY },
  ];
}

function circles(pts: Point[], xs: Scale, ys: Scale, color: string): string {
  const marks = pts.map(
    (p) =>
      `<circle cx="${fmt(xs.apply(p.x))}" cy="${fmt(ys.apply(p.y))}" r="2.5" ` +
      `fill="${color}" fill-opacity="0.45"/>`,
  );
  return marks.join("\n");
}

export function renderScatterFigure(
  spec: FigureSpec,
  mainRows: ScatterRow[],
  baselineRows: ScatterRow[] | null,
  signed: boolean,
  title: string,
): string {
  const mainPts = toPoints(mainRows, signed);
  const basePts = baselineRows === null ? null : toPoints(baselineRows, signed);
  const [ex, ey] = extent(basePts === null ? [mainPts] : [mainPts, basePts]);

  const xs = linearScale(ex.lo, ex.hi, MARGIN.left, MARGIN.left + PLOT_W);
  const ys = linearScale(ey.lo, ey.hi, MARGIN.top + PLOT_H, MARGIN.top);

  const legend =
    basePts === null
      ? []
      : [
          { label: "run", color: COLORS.main },
          { label: "baseline", color: COLORS.baseline },
        ];

  const parts: string[] = [frameOpen(title, spec.xLabel, spec.yLabel, xs, ys, legend)];
  // baseline first so the main series stays on top
  if (basePts !== null) {
    parts.push(`<g id="series-baseline">`);
    parts.push(circles(basePts, xs, ys, COLORS.baseline));
    parts.push("</g>");
  }
  parts.push(`<g id="series-main">`);
  parts.push(circles(mainPts, xs, ys, COLORS.main));
  parts.push("</g>");
  parts.push(frameClose());
  return parts.join("\n");
}

function stepPath(buckets: HistBucket[], xs: Scale, ys: Scale): string {
  const pts: string[] = [];
  const y0 = fmt(ys.apply(0));
  pts.push(`${fmt(xs.apply(buckets[0].left))},${y0}`);
  for (const b of buckets) {
    const y = fmt(ys.apply(b.probability));
    pts.push(`${fmt(xs.apply(b.left))},${y}`);
    pts.push(`${fmt(xs.apply(b.right))},${y}`);
  }
  pts.push(`${fmt(xs.apply(buckets[buckets.length - 1].right))},${y0}`);
  return pts.join(" ");
}

export function renderHistogramFigure(
  spec: FigureSpec,
  mainBuckets: HistBucket[],
  baselineBuckets: HistBucket[] | null,
  title: string,
): string {
  let xLo = mainBuckets[0].left;
  let xHi = mainBuckets[mainBuckets.length - 1].right;
  let pHi = Math.max(...mainBuckets.map((b) => b.probability));
  if (baselineBuckets !== null) {
    xLo = Math.min(xLo, baselineBuckets[0].left);
    xHi = Math.max(xHi, baselineBuckets[baselineBuckets.length - 1].right);
    pHi = Math.max(pHi, ...baselineBuckets.map((b) => b.probability));
  }

  const xs = linearScale(xLo, xHi, MARGIN.left, MARGIN.left + PLOT_W);
  const ys = linearScale(0, pHi * 1.06, MARGIN.top + PLOT_H, MARGIN.top);

  const legend =
    baselineBuckets === null
      ? []
      : [
          { label: "run", color: COLORS.main },
          { label: "baseline", color: COLORS.baseline },
        ];

  const parts: string[] = [frameOpen(title, spec.xLabel, spec.yLabel, xs, ys, legend)];
  parts.push(`<g id="series-main">`);
  for (const b of mainBuckets) {
    if (b.probability <= 0) continue;
    const x = xs.apply(b.left);
    const w = xs.apply(b.right) - x;
    const y = ys.apply(b.probability);
    const h = ys.apply(0) - y;
    parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `fill="${COLORS.main}" fill-opacity="0.65"/>`,
    );
  }
  parts.push("</g>");
  // comparison as a step outline; stroked, so it reads over the bars
  if (baselineBuckets !== null) {
    parts.push(`<g id="series-baseline">`);
    parts.push(
      `<polyline points="${stepPath(baselineBuckets, xs, ys)}" fill="none" ` +
        `stroke="${COLORS.baseline}" stroke-width="2.5"/>`,
    );
    parts.push("</g>");
  }
  parts.push(frameClose());
  return parts.join("\n");
}

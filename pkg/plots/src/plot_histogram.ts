/**
 * Histogram figure for a final-price distribution.
 *
 * Reads a hist.csv (bucket_left,bucket_right,count,probability) and
 * draws probability bars per bucket. With --baseline a second
 * histogram is drawn as a step outline over the bars for comparison.
 * Bucket probabilities must sum to one; the reader enforces that
 * before anything is drawn.
 *
 * Usage:
 *   node dist/plot_histogram.js hist.csv --out fig.svg
 *        [--baseline other_hist.csv] [--title "..."]
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { FigureSpec, loadHist } from "./csv.js";
import { renderHistogramFigure } from "./figures.js";

function main(): void {
  const { values, positionals } = parseArgs({
    options: {
      out: { type: "string" },
      baseline: { type: "string" },
      title: { type: "string", default: "Final price distribution" },
    },
    allowPositionals: true,
  });
  if (positionals.length !== 1 || values.out === undefined) {
    throw new Error(
      "usage: plot_histogram <hist.csv> --out <fig.svg> [--baseline <csv>]",
    );
  }

  const spec: FigureSpec = {
    kind: "histogram",
    inputs: values.baseline === undefined ? [positionals[0]] : [positionals[0], values.baseline],
    xLabel: "price",
    yLabel: "probability",
    output: values.out,
  };

  const mainBuckets = loadHist(spec.inputs[0]);
  const baselineBuckets = spec.inputs.length > 1 ? loadHist(spec.inputs[1]) : null;
  const svg = renderHistogramFigure(spec, mainBuckets, baselineBuckets, values.title ?? "");
  writeFileSync(spec.output, svg);
  console.log(
    `wrote ${spec.output} (${mainBuckets.length} buckets` +
      `${baselineBuckets === null ? "" : `, baseline ${baselineBuckets.length}`})`,
  );
}

try {
  main();
} catch (err) {
  console.error("Fatal:", err instanceof Error ? err.message : err);
  process.exit(1);
}

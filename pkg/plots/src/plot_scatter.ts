/**
 * Scatter figure for per-path step returns.
 *
 * Reads a scatter.csv (path_id,r1,r2) and plots step-2 return against
 * step-1 return. Default view is magnitudes |r1| vs |r2|, which makes
 * the volatility coupling visible; --signed plots the raw returns.
 * With --baseline a second run is drawn underneath the main series so
 * the two populations can be compared in one frame.
 *
 * Usage:
 *   node dist/plot_scatter.js scatter.csv --out fig.svg
 *        [--baseline other_scatter.csv] [--signed] [--title "..."]
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { FigureSpec, loadScatter } from "./csv.js";
import { renderScatterFigure } from "./figures.js";

function main(): void {
  const { values, positionals } = parseArgs({
    options: {
      out: { type: "string" },
      baseline: { type: "string" },
      signed: { type: "boolean", default: false },
      title: { type: "string", default: "Per-path step returns" },
    },
    allowPositionals: true,
  });
  if (positionals.length !== 1 || values.out === undefined) {
    throw new Error(
      "usage: plot_scatter <scatter.csv> --out <fig.svg> [--baseline <csv>] [--signed]",
    );
  }

  const signed = values.signed ?? false;
  const spec: FigureSpec = {
    kind: values.baseline === undefined ? "scatter" : "scatter-overlay",
    inputs: values.baseline === undefined ? [positionals[0]] : [positionals[0], values.baseline],
    xLabel: signed ? "step 1 return" : "|step 1 return|",
    yLabel: signed ? "step 2 return" : "|step 2 return|",
    output: values.out,
  };

  const mainRows = loadScatter(spec.inputs[0]);
  const baselineRows = spec.inputs.length > 1 ? loadScatter(spec.inputs[1]) : null;
  const svg = renderScatterFigure(spec, mainRows, baselineRows, signed, values.title ?? "");
  writeFileSync(spec.output, svg);
  console.log(
    `wrote ${spec.output} (${mainRows.length} rows` +
      `${baselineRows === null ? "" : `, baseline ${baselineRows.length}`})`,
  );
}

try {
  main();
} catch (err) {
  console.error("Fatal:", err instanceof Error ? err.message : err);
  process.exit(1);
}

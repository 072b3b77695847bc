/**
 * Readers for the run artifacts the engine emits.
 *
 * Two file schemas are understood here and nothing else:
 *
 *   scatter.csv   path_id,r1,r2
 *   hist.csv      bucket_left,bucket_right,count,probability
 *
 * Every reader checks the header verbatim and parses each field
 * strictly; the figure scripts do no statistics of their own, so a file
 * that fails these checks is rejected outright rather than repaired.
 */

import { readFileSync } from "node:fs";

export type FigureKind = "scatter" | "scatter-overlay" | "histogram";

/** One figure request: input file(s), kind, labels, output path. */
export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  xLabel: string;
  yLabel: string;
  output: string;
}

export interface ScatterRow {
  pathId: number;
  r1: number;
  r2: number;
}

export interface HistBucket {
  left: number;
  right: number;
  count: number;
  probability: number;
}

const SCATTER_HEADER = "path_id,r1,r2";
const HIST_HEADER = "bucket_left,bucket_right,count,probability";

function numeric(field: string, source: string, line: number): number {
  const v = Number(field);
  if (field.trim() === "" || !Number.isFinite(v)) {
    throw new Error(`${source}:${line}: not a finite number: '${field}'`);
  }
  return v;
}

function rows(text: string, header: string, source: string): string[][] {
  const lines = text.split("\n");
  while (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0 || lines[0] !== header) {
    throw new Error(`${source}: expected header '${header}', got '${lines[0] ?? ""}'`);
  }
  const width = header.split(",").length;
  return lines.slice(1).map((ln, i) => {
    const fields = ln.split(",");
    if (fields.length !== width) {
      throw new Error(`${source}:${i + 2}: expected ${width} fields, got ${fields.length}`);
    }
    return fields;
  });
}

export function parseScatter(text: string, source: string): ScatterRow[] {
  return rows(text, SCATTER_HEADER, source).map((f, i) => ({
    pathId: numeric(f[0], source, i + 2),
    r1: numeric(f[1], source, i + 2),
    r2: numeric(f[2], source, i + 2),
  }));
}

export function parseHist(text: string, source: string): HistBucket[] {
  const buckets = rows(text, HIST_HEADER, source).map((f, i) => ({
    left: numeric(f[0], source, i + 2),
    right: numeric(f[1], source, i + 2),
    count: numeric(f[2], source, i + 2),
    probability: numeric(f[3], source, i + 2),
  }));
  if (buckets.length === 0) {
    throw new Error(`${source}: no buckets`);
  }
  for (let i = 0; i < buckets.length; i++) {
    const b = buckets[i];
    if (!(b.right > b.left)) {
      throw new Error(`${source}:${i + 2}: bucket_right must exceed bucket_left`);
    }
    if (i > 0 && Math.abs(b.left - buckets[i - 1].right) > 1e-9 * Math.abs(b.right - b.left)) {
      throw new Error(`${source}:${i + 2}: buckets are not contiguous`);
    }
  }
  const mass = buckets.reduce((acc, b) => acc + b.probability, 0);
  if (Math.abs(mass - 1) > 1e-6) {
    throw new Error(`${source}: probabilities sum to ${mass}, expected 1`);
  }
  return buckets;
}

export function loadScatter(path: string): ScatterRow[] {
  return parseScatter(readFileSync(path, "utf-8"), path);
}

export function loadHist(path: string): HistBucket[] {
  return parseHist(readFileSync(path, "utf-8"), path);
}

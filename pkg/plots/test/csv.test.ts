import { describe, expect, it } from "vitest";

import { parseHist, parseScatter } from "../src/csv.js";

const SCATTER = "path_id,r1,r2\n0,0.1,-0.2\n1,-0.3,0.05\n2,0,0\n";

const HIST =
  "bucket_left,bucket_right,count,probability\n" +
  "0,0.5,10,0.25\n0.5,1,20,0.5\n1,1.5,0,0\n1.5,2,10,0.25\n";

describe("parseScatter", () => {
  it("parses rows with typed fields", () => {
    const rows = parseScatter(SCATTER, "s.csv");
    expect(rows).toHaveLength(3);
    expect(rows[0]).toEqual({ pathId: 0, r1: 0.1, r2: -0.2 });
    expect(rows[1].r1).toBe(-0.3);
  });

  it("tolerates a missing trailing newline", () => {
    expect(parseScatter(SCATTER.trimEnd(), "s.csv")).toHaveLength(3);
  });

  it("rejects a wrong header", () => {
    expect(() => parseScatter("wrong,header\n1,2\n", "s.csv")).toThrow(/expected header/);
  });

  it("rejects an empty file", () => {
    expect(() => parseScatter("", "s.csv")).toThrow(/expected header/);
  });

  it("rejects a short row", () => {
    expect(() => parseScatter("path_id,r1,r2\n0,0.1\n", "s.csv")).toThrow(/expected 3 fields/);
  });

  it("rejects non-numeric fields with the line number", () => {
    expect(() => parseScatter("path_id,r1,r2\n0,abc,0.1\n", "s.csv")).toThrow(/s\.csv:2/);
  });

  it("rejects empty fields", () => {
    expect(() => parseScatter("path_id,r1,r2\n0,,0.1\n", "s.csv")).toThrow(/not a finite/);
  });
});

describe("parseHist", () => {
  it("parses contiguous buckets", () => {
    const buckets = parseHist(HIST, "h.csv");
    expect(buckets).toHaveLength(4);
    expect(buckets[1]).toEqual({ left: 0.5, right: 1, count: 20, probability: 0.5 });
  });

  it("rejects probabilities that do not sum to one", () => {
    const bad =
      "bucket_left,bucket_right,count,probability\n0,0.5,10,0.25\n0.5,1,20,0.5\n";
    expect(() => parseHist(bad, "h.csv")).toThrow(/sum to 0.75/);
  });

  it("rejects a gap between buckets", () => {
    const bad =
      "bucket_left,bucket_right,count,probability\n0,0.5,10,0.5\n0.6,1,10,0.5\n";
    expect(() => parseHist(bad, "h.csv")).toThrow(/not contiguous/);
  });

  it("rejects an inverted bucket", () => {
    const bad = "bucket_left,bucket_right,count,probability\n0.5,0,10,1\n";
    expect(() => parseHist(bad, "h.csv")).toThrow(/must exceed/);
  });

  it("rejects a header-only file", () => {
    expect(() => parseHist("bucket_left,bucket_right,count,probability\n", "h.csv")).toThrow(
      /no buckets/,
    );
  });

  it("rejects a wrong header", () => {
    expect(() => parseHist(SCATTER, "h.csv")).toThrow(/expected header/);
  });
});

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { CsvError, parseResultsCsv, selectEstimator } from "../src/csv.js";

const FIXTURE = new URL("../fixtures/ea_crossing.csv", import.meta.url).pathname;

describe("results CSV reader", () => {
  it("parses the runner's schema", () => {
    const rows = parseResultsCsv(readFileSync(FIXTURE, "utf-8"));
    expect(rows.length).toBeGreaterThan(0);
    expect(rows[0].estimator).toBe("ea_order");
    expect(rows[0].lx).toBeGreaterThan(0);
    expect(rows[0].configHash).toMatch(/^[0-9a-f]+$/);
  });

  it("rejects an empty file", () => {
    expect(() => parseResultsCsv("")).toThrow(CsvError);
  });

  it("rejects a header-only file", () => {
    const header = readFileSync(FIXTURE, "utf-8").split("\n")[0];
    expect(() => parseResultsCsv(header + "\n")).toThrow(/header only/);
  });

  it("rejects missing columns with a descriptive message", () => {
    expect(() => parseResultsCsv("a,b,c\n1,2,3\n")).toThrow(/missing columns/);
  });

  it("refuses other schema versions", () => {
    const text = readFileSync(FIXTURE, "utf-8").replace(/^1,/gm, "2,");
    expect(() => parseResultsCsv(text)).toThrow(/schema 2 not supported/);
  });

  it("reports available estimators when selection fails", () => {
    const rows = parseResultsCsv(readFileSync(FIXTURE, "utf-8"));
    expect(() => selectEstimator(rows, "nope")).toThrow(/present: ea_order/);
  });
});

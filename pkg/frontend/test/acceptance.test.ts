/** A10: render heatmap, crossing, and scaling figures from real runner CSVs
 * without recomputation, with overlay fits within 5% of the runner's. */

import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { render } from "../src/plot.js";

const fixture = (name: string) => new URL(`../fixtures/${name}`, import.meta.url).pathname;
const outDir = mkdtempSync(join(tmpdir(), "toricsim-plots-"));

describe("A10 plot pipeline", () => {
  it("renders the EA heatmap from the sweep CSV", () => {
    const out = join(outDir, "heatmap.svg");
    const result = render({
      kind: "heatmap",
      csv: [fixture("ea_heatmap.csv")],
      out,
      estimator: "ea_order",
      title: "glass order over the measurement-probability plane",
    });
    expect(existsSync(result.out)).toBe(true);
    const doc = readFileSync(out, "utf-8");
    expect(doc).toContain("<svg");
    expect((doc.match(/<rect/g) ?? []).length).toBeGreaterThan(45);
  });

  it("renders the crossing figure and agrees with the runner fit within 5%", () => {
    const out = join(outDir, "crossing.svg");
    const result = render({
      kind: "crossing",
      csv: [fixture("ea_crossing.csv")],
      out,
      estimator: "ea_order",
      runner_fit: fixture("crossing_fit.json"),
    });
    expect(existsSync(result.out)).toBe(true);
    expect(result.ownFit).not.toBeNull();
    expect(result.runnerFit).not.toBeNull();
    expect(result.disagreement).not.toBeNull();
    expect(result.disagreement!).toBeLessThanOrEqual(0.05);
    const doc = readFileSync(out, "utf-8");
    expect(doc).toContain("q_c");
    expect((doc.match(/<polyline/g) ?? []).length).toBeGreaterThanOrEqual(3);
  });

  it("renders the spanning scaling figure and agrees with the runner fit within 5%", () => {
    const out = join(outDir, "scaling.svg");
    const result = render({
      kind: "scaling",
      csv: [fixture("spanning.csv")],
      out,
      estimator: "spanning",
      runner_fit: fixture("spanning_fit.json"),
    });
    expect(existsSync(result.out)).toBe(true);
    expect(result.disagreement).not.toBeNull();
    expect(result.disagreement!).toBeLessThanOrEqual(0.05);
    const doc = readFileSync(out, "utf-8");
    expect(doc).toContain("lnL");
  });

  it("never renders from an empty table", () => {
    expect(() =>
      render({
        kind: "heatmap",
        csv: [fixture("ea_crossing.csv")],
        out: join(outDir, "never.svg"),
        estimator: "spanning",
      }),
    ).toThrow(/not in CSV/);
    expect(existsSync(join(outDir, "never.svg"))).toBe(false);
  });
});

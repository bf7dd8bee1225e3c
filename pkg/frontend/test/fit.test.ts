import { describe, expect, it } from "vitest";

import {
  fitCrossing,
  fitExpDecay,
  fitLogGrowth,
  fitQuadraticLog,
  relativeDisagreement,
} from "../src/fit.js";

describe("overlay fits", () => {
  it("recovers exact slow-log data", () => {
    const a = 1 / (2 * Math.PI);
    const sizes = [16, 32, 64, 128, 256];
    const ys = sizes.map((L) => a * (Math.log(L) + Math.log(Math.log(L))) + 0.37);
    const fit = fitLogGrowth(sizes, ys);
    expect(Math.abs(fit.params.a - a)).toBeLessThan(1e-10);
    expect(Math.abs(fit.params.b - 0.37)).toBeLessThan(1e-10);
  });

  it("recovers exact quadratic-log data", () => {
    const xs = [2, 4, 8, 16, 32];
    const ys = xs.map((x) => 0.3 * Math.log(x) + 0.02 * Math.log(x) ** 2 + 1.0);
    const fit = fitQuadraticLog(xs, ys);
    expect(Math.abs(fit.params.a - 0.3)).toBeLessThan(1e-9);
    expect(Math.abs(fit.params.c - 0.02)).toBeLessThan(1e-9);
  });

  it("recovers exact decay data", () => {
    const ds = [2, 4, 6, 8, 12];
    const ys = ds.map((d) => 0.8 * Math.exp(-d / 3.5));
    const fit = fitExpDecay(ds, ys);
    expect(Math.abs(fit.params.xi - 3.5)).toBeLessThan(1e-9);
    expect(Math.abs(fit.params.amplitude - 0.8)).toBeLessThan(1e-9);
  });

  it("finds the crossing of scaling-collapse curves", () => {
    const qs = Array.from({ length: 15 }, (_, i) => 0.2 + (0.7 * i) / 14);
    const qc = 0.5;
    const curves = new Map<number, Array<[number, number]>>();
    for (const L of [16, 32, 64]) {
      curves.set(
        L,
        qs.map((q) => [q, L * Math.exp(-(q - qc) * Math.sqrt(L))] as [number, number]),
      );
    }
    const fit = fitCrossing(curves);
    expect(Math.abs(fit.params.q_c - qc)).toBeLessThan(1e-9);
  });

  it("measures relative disagreement", () => {
    expect(relativeDisagreement({ a: 1.0 }, { a: 1.04 })).toBeCloseTo(0.0385, 3);
    expect(relativeDisagreement({ a: 1.0, b: 5 }, { a: 1.0 })).toBe(0);
  });
});

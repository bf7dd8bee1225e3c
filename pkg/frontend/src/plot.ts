/** Figure assembly: pure consumer of the runner's CSV tables.
 *
 * Physics never gets recomputed here; the only arithmetic is least-squares
 * overlay fitting, and when the runner's own fit output is supplied the two
 * are compared and any disagreement beyond 5% is reported loudly.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { CsvError, parseResultsCsv, ResultRow, selectEstimator } from "./csv.js";
import {
  FitResult,
  fitCrossing,
  fitExpDecay,
  fitLogGrowth,
  fitQuadraticLog,
  relativeDisagreement,
} from "./fit.js";
import * as svg from "./svg.js";

export type FigureKind = "heatmap" | "scaling" | "crossing" | "decay";

export interface PlotSpec {
  kind: FigureKind;
  csv: string[];
  out: string;
  estimator: string;
  title?: string;
  x_label?: string;
  y_label?: string;
  runner_fit?: string;
}

export interface RenderResult {
  out: string;
  ownFit: FitResult | null;
  runnerFit: FitResult | null;
  disagreement: number | null;
}

export function parsePlotSpec(text: string): PlotSpec {
  const raw = JSON.parse(text);
  const kinds: FigureKind[] = ["heatmap", "scaling", "crossing", "decay"];
  if (!kinds.includes(raw.kind)) {
    throw new Error(`figure kind must be one of ${kinds.join(", ")}`);
  }
  if (!Array.isArray(raw.csv) || raw.csv.length === 0) {
    throw new Error("plot spec needs at least one input CSV path");
  }
  if (typeof raw.out !== "string" || typeof raw.estimator !== "string") {
    throw new Error("plot spec needs 'out' and 'estimator'");
  }
  return raw as PlotSpec;
}

function loadRows(spec: PlotSpec): ResultRow[] {
  const rows: ResultRow[] = [];
  for (const path of spec.csv) {
    rows.push(...parseResultsCsv(readFileSync(path, "utf-8")));
  }
  return selectEstimator(rows, spec.estimator);
}

function renderHeatmap(spec: PlotSpec, rows: ResultRow[]): string {
  const ps = [...new Set(rows.map((r) => r.p))].sort((a, b) => a - b);
  const qs = [...new Set(rows.map((r) => r.q))].sort((a, b) => a - b);
  if (ps.length < 2 || qs.length < 2) {
    throw new CsvError("heatmap needs a (p, q) sweep grid");
  }
  const byKey = new Map(rows.map((r) => [`${r.p}|${r.q}`, r.mean]));
  const values = rows.map((r) => r.mean);
  const vMin = Math.min(...values);
  const vMax = Math.max(...values);
  const width = 640;
  const height = 480;
  const margin = 70;
  const cw = (width - 2 * margin - 60) / qs.length;
  const ch = (height - 2 * margin) / ps.length;
  let body = "";
  ps.forEach((p, i) => {
    qs.forEach((q, j) => {
      const v = byKey.get(`${p}|${q}`);
      if (v === undefined) return;
      const t = vMax > vMin ? (v - vMin) / (vMax - vMin) : 0.5;
      const x = margin + j * cw;
      const y = height - margin - (i + 1) * ch;
      body += `<rect x="${x}" y="${y}" width="${cw}" height="${ch}" fill="${svg.heatColor(t)}"/>`;
    });
  });
  qs.forEach((q, j) => {
    body += `<text x="${margin + (j + 0.5) * cw}" y="${height - margin + 16}" font-size="10" text-anchor="middle">${q}</text>`;
  });
  ps.forEach((p, i) => {
    body += `<text x="${margin - 8}" y="${height - margin - (i + 0.5) * ch + 3}" font-size="10" text-anchor="end">${p}</text>`;
  });
  // colorbar
  const cbx = width - margin - 30;
  for (let k = 0; k < 60; k++) {
    const y = height - margin - ((k + 1) * (height - 2 * margin)) / 60;
    body += `<rect x="${cbx}" y="${y}" width="16" height="${(height - 2 * margin) / 60 + 0.5}" fill="${svg.heatColor(k / 59)}"/>`;
  }
  body += `<text x="${cbx + 20}" y="${height - margin}" font-size="10">${vMin.toPrecision(3)}</text>`;
  body += `<text x="${cbx + 20}" y="${margin + 10}" font-size="10">${vMax.toPrecision(3)}</text>`;
  body += `<text x="${width / 2}" y="${height - 16}" font-size="13" text-anchor="middle">${spec.x_label ?? "q"}</text>`;
  body += `<text x="20" y="${height / 2}" font-size="13" transform="rotate(-90 20 ${height / 2})" text-anchor="middle">${spec.y_label ?? "p"}</text>`;
  body += `<text x="${width / 2}" y="26" font-size="14" text-anchor="middle">${spec.title ?? spec.estimator + " heatmap"}</text>`;
  return svg.document(width, height, body);
}

function renderCrossing(
  spec: PlotSpec,
  rows: ResultRow[],
): { doc: string; fit: FitResult } {
  const curves = new Map<number, Array<[number, number]>>();
  for (const r of rows) {
    if (!curves.has(r.lx)) curves.set(r.lx, []);
    curves.get(r.lx)!.push([r.q, r.mean]);
  }
  const fit = fitCrossing(curves);
  const sizes = [...curves.keys()].sort((a, b) => a - b);
  const xs = rows.map((r) => r.q);
  const ys = rows.map((r) => r.mean / r.lx);
  const f = svg.makeFrame(xs, ys);
  let body = svg.axes(
    f,
    spec.x_label ?? "q",
    spec.y_label ?? `${spec.estimator} / L`,
    spec.title ?? "order-parameter crossing",
  );
  const entries: Array<[string, string]> = [];
  sizes.forEach((L, i) => {
    const pts = curves
      .get(L)!
      .map(([q, v]) => [q, v / L] as [number, number])
      .sort((a, b) => a[0] - b[0]);
    const color = svg.seriesColor(i);
    body += svg.polyline(f, pts, color) + svg.markers(f, pts, color);
    entries.push([`L = ${L}`, color]);
  });
  const qc = fit.params.q_c;
  body += `<line x1="${svg.px(f, qc)}" y1="${svg.py(f, f.yMin)}" x2="${svg.px(f, qc)}" y2="${svg.py(f, f.yMax)}" stroke="#333" stroke-dasharray="4 4"/>`;
  body += `<text x="${svg.px(f, qc) + 4}" y="${f.margin + 12}" font-size="11">q_c = ${qc.toFixed(3)}</text>`;
  body += svg.legend(f, entries);
  return { doc: svg.document(f.width, f.height, body), fit };
}

function renderScaling(
  spec: PlotSpec,
  rows: ResultRow[],
): { doc: string; fit: FitResult } {
  // spanning numbers scale with the sweep size, entropies with the cut length
  const bySize = spec.estimator === "spanning" || rows.every((r) => r.arg === null);
  const pts: Array<[number, number, number | null]> = bySize
    ? rows.map((r) => [r.lx, r.mean, r.stderr] as [number, number, number | null])
    : rows.map((r) => [r.arg as number, r.mean, r.stderr] as [number, number, number | null]);
  pts.sort((a, b) => a[0] - b[0]);
  const xs = pts.map((p) => Math.log(p[0]));
  const ys = pts.map((p) => p[1]);
  const fit = bySize
    ? fitLogGrowth(pts.map((p) => p[0]), ys)
    : fitQuadraticLog(pts.map((p) => p[0]), ys);
  const f = svg.makeFrame(xs, ys);
  let body = svg.axes(
    f,
    spec.x_label ?? (bySize ? "ln L" : "ln |A|"),
    spec.y_label ?? spec.estimator,
    spec.title ?? `${spec.estimator} scaling`,
  );
  const dataPts = pts.map((p) => [Math.log(p[0]), p[1]] as [number, number]);
  body += svg.markers(f, dataPts, svg.seriesColor(0));
  body += svg.errorBars(f, pts.map((p) => [Math.log(p[0]), p[1], p[2]] as [number, number, number | null]), svg.seriesColor(0));
  const grid = Array.from({ length: 60 }, (_, i) => {
    const lx = f.xMin + ((f.xMax - f.xMin) * i) / 59;
    const L = Math.exp(lx);
    const y = bySize
      ? fit.params.a * (Math.log(L) + Math.log(Math.log(L))) + fit.params.b
      : fit.params.a * lx + fit.params.c * lx * lx + fit.params.b;
    return [lx, y] as [number, number];
  }).filter(([x]) => Math.exp(x) > 1.05);
  body += svg.polyline(f, grid, svg.seriesColor(1), true);
  body += svg.legend(f, [
    ["data", svg.seriesColor(0)],
    [bySize ? "a(lnL+lnlnL)+b" : "a ln|A| + c ln^2|A| + b", svg.seriesColor(1)],
  ]);
  return { doc: svg.document(f.width, f.height, body), fit };
}

function renderDecay(
  spec: PlotSpec,
  rows: ResultRow[],
): { doc: string; fit: FitResult } {
  const pts = rows
    .filter((r) => r.arg !== null)
    .map((r) => [r.arg as number, r.mean] as [number, number])
    .sort((a, b) => a[0] - b[0]);
  if (pts.length < 3) throw new CsvError("decay plot needs rows with a distance column");
  const fit = fitExpDecay(pts.map((p) => p[0]), pts.map((p) => p[1]));
  const positive = pts.filter((p) => p[1] > 0);
  const xs = positive.map((p) => p[0]);
  const ys = positive.map((p) => Math.log(p[1]));
  const f = svg.makeFrame(xs, ys);
  let body = svg.axes(
    f,
    spec.x_label ?? "distance",
    spec.y_label ?? `ln ${spec.estimator}`,
    spec.title ?? `${spec.estimator} decay`,
  );
  body += svg.markers(f, positive.map((p) => [p[0], Math.log(p[1])] as [number, number]), svg.seriesColor(0));
  const line: Array<[number, number]> = [
    [f.xMin, Math.log(fit.params.amplitude) - f.xMin / fit.params.xi],
    [f.xMax, Math.log(fit.params.amplitude) - f.xMax / fit.params.xi],
  ];
  body += svg.polyline(f, line, svg.seriesColor(1), true);
  body += svg.legend(f, [
    ["data", svg.seriesColor(0)],
    [`xi = ${fit.params.xi.toFixed(2)}`, svg.seriesColor(1)],
  ]);
  return { doc: svg.document(f.width, f.height, body), fit };
}

export function render(spec: PlotSpec): RenderResult {
  const rows = loadRows(spec);
  let doc: string;
  let ownFit: FitResult | null = null;
  if (spec.kind === "heatmap") {
    doc = renderHeatmap(spec, rows);
  } else if (spec.kind === "crossing") {
    ({ doc, fit: ownFit } = renderCrossing(spec, rows));
  } else if (spec.kind === "scaling") {
    ({ doc, fit: ownFit } = renderScaling(spec, rows));
  } else {
    ({ doc, fit: ownFit } = renderDecay(spec, rows));
  }
  let runnerFit: FitResult | null = null;
  let disagreement: number | null = null;
  if (spec.runner_fit && ownFit) {
    const payload = JSON.parse(readFileSync(spec.runner_fit, "utf-8"));
    runnerFit = { model: payload.model, params: payload.params };
    disagreement = relativeDisagreement(ownFit.params, runnerFit.params);
    if (disagreement > 0.05) {
      console.error(
        `overlay fit disagrees with the runner by ${(disagreement * 100).toFixed(1)}%:\n` +
          `  overlay: ${JSON.stringify(ownFit.params)}\n` +
          `  runner:  ${JSON.stringify(runnerFit.params)}`,
      );
    }
  }
  writeFileSync(spec.out, doc, "utf-8");
  return { out: spec.out, ownFit, runnerFit, disagreement };
}

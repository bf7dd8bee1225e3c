/** Minimal hand-rolled SVG output: axes, scatter/line layers, heat cells. */

export interface Frame {
  width: number;
  height: number;
  margin: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function makeFrame(
  xs: number[],
  ys: number[],
  width = 640,
  height = 440,
  margin = 60,
): Frame {
  const pad = (lo: number, hi: number): [number, number] => {
    if (lo === hi) return [lo - 1, hi + 1];
    const d = 0.06 * (hi - lo);
    return [lo - d, hi + d];
  };
  const [xMin, xMax] = pad(Math.min(...xs), Math.max(...xs));
  const [yMin, yMax] = pad(Math.min(...ys), Math.max(...ys));
  return { width, height, margin, xMin, xMax, yMin, yMax };
}

export function px(f: Frame, x: number): number {
  return f.margin + ((x - f.xMin) / (f.xMax - f.xMin)) * (f.width - 2 * f.margin);
}

export function py(f: Frame, y: number): number {
  return f.height - f.margin - ((y - f.yMin) / (f.yMax - f.yMin)) * (f.height - 2 * f.margin);
}

const PALETTE = ["#1965b0", "#dc050c", "#4eb265", "#f7a600", "#883e9c", "#777777"];

export function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

export function axes(f: Frame, xLabel: string, yLabel: string, title: string): string {
  const x0 = f.margin;
  const y0 = f.height - f.margin;
  const ticks = (lo: number, hi: number, n = 5): number[] =>
    Array.from({ length: n }, (_, i) => lo + ((hi - lo) * i) / (n - 1));
  const fmt = (v: number) => (Math.abs(v) >= 1000 ? v.toFixed(0) : v.toPrecision(3));
  let out = "";
  out += `<line x1="${x0}" y1="${y0}" x2="${f.width - f.margin}" y2="${y0}" stroke="black"/>`;
  out += `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${f.margin}" stroke="black"/>`;
  for (const t of ticks(f.xMin, f.xMax)) {
    out += `<line x1="${px(f, t)}" y1="${y0}" x2="${px(f, t)}" y2="${y0 + 5}" stroke="black"/>`;
    out += `<text x="${px(f, t)}" y="${y0 + 20}" font-size="11" text-anchor="middle">${fmt(t)}</text>`;
  }
  for (const t of ticks(f.yMin, f.yMax)) {
    out += `<line x1="${x0 - 5}" y1="${py(f, t)}" x2="${x0}" y2="${py(f, t)}" stroke="black"/>`;
    out += `<text x="${x0 - 8}" y="${py(f, t) + 4}" font-size="11" text-anchor="end">${fmt(t)}</text>`;
  }
  out += `<text x="${f.width / 2}" y="${f.height - 12}" font-size="13" text-anchor="middle">${xLabel}</text>`;
  out += `<text x="16" y="${f.height / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 ${f.height / 2})">${yLabel}</text>`;
  out += `<text x="${f.width / 2}" y="24" font-size="14" text-anchor="middle">${title}</text>`;
  return out;
}

export function polyline(f: Frame, pts: Array<[number, number]>, color: string, dashed = false): string {
  const path = pts.map(([x, y]) => `${px(f, x).toFixed(2)},${py(f, y).toFixed(2)}`).join(" ");
  const dash = dashed ? ` stroke-dasharray="6 4"` : "";
  return `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`;
}

export function markers(f: Frame, pts: Array<[number, number]>, color: string): string {
  return pts
    .map(([x, y]) => `<circle cx="${px(f, x).toFixed(2)}" cy="${py(f, y).toFixed(2)}" r="3.2" fill="${color}"/>`)
    .join("");
}

export function errorBars(
  f: Frame,
  pts: Array<[number, number, number | null]>,
  color: string,
): string {
  let out = "";
  for (const [x, y, err] of pts) {
    if (err === null || err === 0) continue;
    const cx = px(f, x);
    out += `<line x1="${cx}" y1="${py(f, y - err)}" x2="${cx}" y2="${py(f, y + err)}" stroke="${color}" stroke-width="1"/>`;
  }
  return out;
}

export function legend(f: Frame, entries: Array<[string, string]>): string {
  let out = "";
  entries.forEach(([label, color], i) => {
    const y = f.margin + 16 * i;
    const x = f.width - f.margin - 130;
    out += `<rect x="${x}" y="${y - 8}" width="10" height="10" fill="${color}"/>`;
    out += `<text x="${x + 16}" y="${y + 1}" font-size="11">${label}</text>`;
  });
  return out;
}

/** viridis-ish three-stop gradient, v in [0, 1] */
export function heatColor(v: number): string {
  const stops: Array<[number, [number, number, number]]> = [
    [0.0, [68, 1, 84]],
    [0.5, [33, 145, 140]],
    [1.0, [253, 231, 37]],
  ];
  const t = Math.min(1, Math.max(0, v));
  for (let i = 0; i + 1 < stops.length; i++) {
    const [t0, c0] = stops[i];
    const [t1, c1] = stops[i + 1];
    if (t <= t1) {
      const u = (t - t0) / (t1 - t0);
      const c = c0.map((a, k) => Math.round(a + u * (c1[k] - a)));
      return `rgb(${c[0]},${c[1]},${c[2]})`;
    }
  }
  return "rgb(253,231,37)";
}

export function document(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

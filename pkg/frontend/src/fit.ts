/** Overlay fits mirroring the runner's models (used for display only;
 * disagreements with the runner's own fit output are reported, never hidden). */

export interface FitResult {
  model: string;
  params: Record<string, number>;
}

function lstsq(design: number[][], y: number[]): number[] {
  // normal equations; the design matrices here are tiny and well conditioned
  const m = design[0].length;
  const ata: number[][] = Array.from({ length: m }, () => Array(m).fill(0));
  const atb: number[] = Array(m).fill(0);
  for (let r = 0; r < design.length; r++) {
    for (let i = 0; i < m; i++) {
      atb[i] += design[r][i] * y[r];
      for (let j = 0; j < m; j++) {
        ata[i][j] += design[r][i] * design[r][j];
      }
    }
  }
  // gaussian elimination with partial pivoting
  const a = ata.map((row, i) => [...row, atb[i]]);
  for (let col = 0; col < m; col++) {
    let piv = col;
    for (let r = col + 1; r < m; r++) {
      if (Math.abs(a[r][col]) > Math.abs(a[piv][col])) piv = r;
    }
    if (Math.abs(a[piv][col]) < 1e-12) throw new Error("degenerate design matrix");
    [a[col], a[piv]] = [a[piv], a[col]];
    for (let r = 0; r < m; r++) {
      if (r === col) continue;
      const f = a[r][col] / a[col][col];
      for (let c = col; c <= m; c++) a[r][c] -= f * a[col][c];
    }
  }
  return a.map((row, i) => row[m] / row[i]);
}

/** y = a (ln L + ln ln L) + b */
export function fitLogGrowth(sizes: number[], values: number[]): FitResult {
  const design = sizes.map((L) => [Math.log(L) + Math.log(Math.log(L)), 1]);
  const [a, b] = lstsq(design, values);
  return { model: "log_growth", params: { a, b } };
}

/** y = a ln x + c (ln x)^2 + b */
export function fitQuadraticLog(xs: number[], values: number[]): FitResult {
  const design = xs.map((x) => [Math.log(x), Math.log(x) ** 2, 1]);
  const [a, c, b] = lstsq(design, values);
  return { model: "quadratic_log", params: { a, c, b } };
}

/** y = A exp(-d/xi), fit on the logarithm of positive points */
export function fitExpDecay(ds: number[], values: number[]): FitResult {
  const pts = ds.map((d, i) => [d, values[i]]).filter(([, v]) => v > 0);
  if (pts.length < 3) throw new Error("not enough positive points for a decay fit");
  const design = pts.map(([d]) => [d, 1]);
  const [slope, intercept] = lstsq(design, pts.map(([, v]) => Math.log(v)));
  if (slope >= 0) throw new Error("data does not decay");
  return { model: "exp_decay", params: { amplitude: Math.exp(intercept), xi: -1 / slope } };
}

function zeroCrossings(q: number[], diff: number[]): number[] {
  const out: number[] = [];
  for (let k = 0; k + 1 < q.length; k++) {
    if (diff[k] === 0) out.push(q[k]);
    else if (diff[k] * diff[k + 1] < 0) {
      const t = diff[k] / (diff[k] - diff[k + 1]);
      out.push(q[k] + t * (q[k + 1] - q[k]));
    }
  }
  return out;
}

/**
 * Transition point from order-parameter curves at different sizes, via the
 * effective size exponent x(q) = ln(O2/O1)/ln(L2/L1) of adjacent size pairs
 * (the same estimator the runner uses).
 */
export function fitCrossing(curves: Map<number, Array<[number, number]>>): FitResult {
  const sizes = [...curves.keys()].sort((x, y) => x - y);
  if (sizes.length < 2) throw new Error("crossing fit needs at least two sizes");
  const grids = sizes.map((L) =>
    [...curves.get(L)!].sort((r, s) => r[0] - s[0]),
  );
  const q = grids[0].map(([qq]) => qq);
  const exponents: number[][] = [];
  for (let i = 0; i + 1 < sizes.length; i++) {
    const ratio = Math.log(sizes[i + 1] / sizes[i]);
    exponents.push(q.map((_, k) => Math.log(grids[i + 1][k][1] / grids[i][k][1]) / ratio));
  }
  let crossings: number[] = [];
  for (let i = 0; i + 1 < exponents.length; i++) {
    crossings = crossings.concat(
      zeroCrossings(q, q.map((_, k) => exponents[i][k] - exponents[i + 1][k])),
    );
  }
  if (crossings.length === 0) {
    for (const x of exponents) {
      crossings = crossings.concat(zeroCrossings(q, x.map((v) => v - 0.5)));
    }
  }
  if (crossings.length === 0) throw new Error("curves do not cross on the grid");
  const qc = crossings.reduce((s, v) => s + v, 0) / crossings.length;
  return { model: "crossing_point", params: { q_c: qc } };
}

/** Relative disagreement between two fits on their shared parameters. */
export function relativeDisagreement(a: Record<string, number>, b: Record<string, number>): number {
  let worst = 0;
  for (const key of Object.keys(a)) {
    if (!(key in b)) continue;
    const denom = Math.max(Math.abs(a[key]), Math.abs(b[key]), 1e-12);
    worst = Math.max(worst, Math.abs(a[key] - b[key]) / denom);
  }
  return worst;
}

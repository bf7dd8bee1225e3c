/** Reader for the simulator's results CSV (schema v1). */

export const SUPPORTED_SCHEMA = 1;

export interface ResultRow {
  schemaVersion: number;
  configHash: string;
  engine: string;
  topology: string;
  region: string;
  lx: number;
  ly: number;
  p: number;
  q: number;
  estimator: string;
  arg: number | null;
  mean: number;
  stderr: number | null;
  samples: number;
}

const REQUIRED = [
  "schema_version",
  "config_hash",
  "engine",
  "topology",
  "region",
  "lx",
  "ly",
  "p",
  "q",
  "estimator",
  "arg",
  "mean",
  "stderr",
  "samples",
];

export class CsvError extends Error {}

/** Parse the results CSV; the writer never quotes, so a plain split is exact. */
export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvError("empty CSV: nothing to plot");
  }
  const header = lines[0].split(",");
  const idx = new Map(header.map((h, i) => [h, i]));
  const missing = REQUIRED.filter((c) => !idx.has(c));
  if (missing.length > 0) {
    throw new CsvError(
      `missing columns: ${missing.join(", ")} (expected: ${REQUIRED.join(", ")})`,
    );
  }
  if (lines.length === 1) {
    throw new CsvError("empty CSV: header only");
  }
  const rows: ResultRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    const cell = (name: string) => parts[idx.get(name)!];
    const version = Number(cell("schema_version"));
    if (version !== SUPPORTED_SCHEMA) {
      throw new CsvError(
        `CSV schema ${version} not supported (this build reads schema ${SUPPORTED_SCHEMA})`,
      );
    }
    rows.push({
      schemaVersion: version,
      configHash: cell("config_hash"),
      engine: cell("engine"),
      topology: cell("topology"),
      region: cell("region"),
      lx: Number(cell("lx")),
      ly: Number(cell("ly")),
      p: Number(cell("p")),
      q: Number(cell("q")),
      estimator: cell("estimator"),
      arg: cell("arg") === "" ? null : Number(cell("arg")),
      mean: Number(cell("mean")),
      stderr: cell("stderr") === "" ? null : Number(cell("stderr")),
      samples: Number(cell("samples")),
    });
  }
  return rows;
}

export function selectEstimator(rows: ResultRow[], estimator: string): ResultRow[] {
  const out = rows.filter((r) => r.estimator === estimator);
  if (out.length === 0) {
    const seen = [...new Set(rows.map((r) => r.estimator))].join(", ");
    throw new CsvError(`estimator '${estimator}' not in CSV (present: ${seen})`);
  }
  return out;
}

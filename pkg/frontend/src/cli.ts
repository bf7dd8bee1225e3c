/** CLI: plot --spec <path.json> */

import { readFileSync } from "node:fs";

import { parsePlotSpec, render } from "./plot.js";

export function main(argv: string[]): number {
  const args = [...argv];
  if (args[0] === "plot") args.shift();
  const specIdx = args.indexOf("--spec");
  if (specIdx < 0 || specIdx + 1 >= args.length) {
    console.error("usage: plot --spec <plotspec.json>");
    return 2;
  }
  try {
    const spec = parsePlotSpec(readFileSync(args[specIdx + 1], "utf-8"));
    const result = render(spec);
    console.log(`wrote ${result.out}`);
    if (result.ownFit) {
      console.log(`overlay fit: ${JSON.stringify(result.ownFit.params)}`);
    }
    if (result.disagreement !== null) {
      console.log(`runner-fit disagreement: ${(result.disagreement * 100).toFixed(2)}%`);
    }
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

process.exitCode = main(process.argv.slice(2));

#!/usr/bin/env node
/** plot --kind cdf|prr --in FILE [--in FILE ...] --out PATH
 *
 * Reads the simulator's cdf.csv / prr.csv schemas and writes one SVG.
 * Nothing is recomputed: the figure is a pure function of the CSV rows.
 */

import { readFileSync, realpathSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { fileURLToPath } from "node:url";
import { cdfFigure } from "./cdf.js";
import { prrFigure } from "./prr.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 2;
  }
  const { values } = parsed;
  if (values.help) {
    console.log("usage: plot --kind cdf|prr --in FILE [--in FILE ...] --out PATH");
    return 0;
  }
  const kind = values.kind;
  const inputs = values.in ?? [];
  const out = values.out;
  if (kind !== "cdf" && kind !== "prr") {
    console.error(`error: --kind must be cdf or prr, got '${kind ?? ""}'`);
    return 2;
  }
  if (inputs.length === 0 || !out) {
    console.error("error: --in and --out are required");
    return 2;
  }

  let texts: string[];
  try {
    texts = inputs.map((p) => readFileSync(p, "utf8"));
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 1;
  }

  try {
    const fig = kind === "cdf" ? cdfFigure(texts) : prrFigure(texts);
    for (const w of fig.warnings) console.warn(`warning: ${w}`);
    writeFileSync(out, fig.svg);
    const n = "curves" in fig ? fig.curves.length : fig.series.length;
    console.log(`${out}: ${n} scheme${n === 1 ? "" : "s"}`);
    return 0;
  } catch (e) {
    // no partial output file on error
    console.error(`error: ${(e as Error).message}`);
    return 1;
  }
}

let invoked = "";
try {
  invoked = process.argv[1] ? realpathSync(process.argv[1]) : "";
} catch {
  invoked = "";
}
if (invoked && invoked === fileURLToPath(import.meta.url)) {
  process.exit(main(process.argv.slice(2)));
}

#!/usr/bin/env node
/**
 * Batch figure renderer over the simulation CLI's CSV artifacts.
 *
 * Usage:
 *   vibrofem-plots render --kind frf-error --in frf.csv --in error.csv \
 *       --out figure.svg --windows 258,578
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { FigureKind, FigureSpec, render } from "./figures.js";

const KINDS: FigureKind[] = ["frf-error", "wavelength", "solver-bars", "phase"];

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
        windows: { type: "string" },
        title: { type: "string" },
      },
    });
  } catch (err) {
    process.stderr.write(`argument error: ${(err as Error).message}\n`);
    return 2;
  }
  const { values, positionals } = parsed;
  if (positionals[0] !== "render") {
    process.stderr.write(
      `usage: vibrofem-plots render --kind {${KINDS.join("|")}} ` +
        "--in CSV [--in CSV ...] --out FILE.svg [--windows f1,f2] [--title T]\n",
    );
    return 2;
  }
  if (!values.kind || !KINDS.includes(values.kind as FigureKind)) {
    process.stderr.write(`--kind must be one of: ${KINDS.join(", ")}\n`);
    return 2;
  }
  if (!values.in || values.in.length === 0 || !values.out) {
    process.stderr.write("--in and --out are required\n");
    return 2;
  }
  let windows: number[] | undefined;
  if (values.windows) {
    windows = values.windows.split(",").map((s) => Number(s.trim()));
    if (windows.some((v) => !Number.isFinite(v))) {
      process.stderr.write(`--windows must be comma-separated numbers\n`);
      return 2;
    }
  }
  const spec: FigureSpec = {
    kind: values.kind as FigureKind,
    inputs: values.in,
    output: values.out,
    windows,
    title: values.title,
  };
  try {
    writeFileSync(spec.output, render(spec), "utf8");
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}

/**
 * Strict reader for the CSV dialect of the simulation CLI: comma
 * separator, `.` decimal, one header row, LF endings.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface Table {
  path: string;
  header: string[];
  rows: string[][];
}

/** Parse one CSV artifact; rectangular, at least one data row. */
export function readTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new Error(`cannot read CSV file ${path}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { delimiter: "," });
  if (parsed.errors.length > 0) {
    throw new Error(`malformed CSV ${path}: ${parsed.errors[0].message}`);
  }
  const lines = parsed.data.filter((r) => r.length > 1 || r[0] !== "");
  if (lines.length === 0) {
    throw new Error(`malformed CSV ${path}: missing header row`);
  }
  const header = lines[0];
  const rows = lines.slice(1);
  rows.forEach((cells, i) => {
    if (cells.length !== header.length) {
      throw new Error(
        `malformed CSV ${path}: row ${i + 1} has ${cells.length} cells, ` +
          `expected ${header.length}`,
      );
    }
  });
  if (rows.length === 0) {
    throw new Error(`no rows in ${path}`);
  }
  return { path, header, rows };
}

function columnIndex(table: Table, name: string): number {
  const k = table.header.indexOf(name);
  if (k < 0) {
    throw new Error(
      `missing column "${name}" in ${table.path} ` +
        `(have: ${table.header.join(", ")})`,
    );
  }
  return k;
}

/** Numeric column by exact header name. */
export function column(table: Table, name: string): number[] {
  const k = columnIndex(table, name);
  return table.rows.map((r) => {
    const v = Number(r[k]);
    if (!Number.isFinite(v)) {
      throw new Error(
        `malformed CSV ${table.path}: non-numeric cell "${r[k]}" in "${name}"`,
      );
    }
    return v;
  });
}

/** String column by exact header name. */
export function stringColumn(table: Table, name: string): string[] {
  const k = columnIndex(table, name);
  return table.rows.map((r) => r[k]);
}

/** All numeric columns whose header starts with a prefix, in file order. */
export function columnsByPrefix(
  table: Table,
  prefix: string,
): { name: string; values: number[] }[] {
  const out = table.header
    .filter((h) => h.startsWith(prefix))
    .map((name) => ({ name, values: column(table, name) }));
  if (out.length === 0) {
    throw new Error(`no columns starting with "${prefix}" in ${table.path}`);
  }
  return out;
}

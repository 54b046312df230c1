/** Minimal numeric CSV reading for the solver's output contracts. */

import { readFileSync } from "fs";

export interface NumericTable {
  columns: string[];
  rows: number[][];
}

export class CsvError extends Error {}

export function parseCsv(text: string, source: string): NumericTable {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvError(`${source}: file is empty`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new CsvError(
        `${source}: line ${i + 1} has ${parts.length} fields, expected ${columns.length}`
      );
    }
    const row = parts.map((p) => Number(p));
    if (row.some((v) => Number.isNaN(v))) {
      throw new CsvError(`${source}: line ${i + 1} has a non-numeric field`);
    }
    rows.push(row);
  }
  return { columns, rows };
}

export function readCsv(path: string): NumericTable {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch {
    throw new CsvError(`missing file: ${path}`);
  }
  return parseCsv(text, path);
}

export function column(table: NumericTable, name: string, source: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new CsvError(`${source}: missing column ${name}`);
  }
  return table.rows.map((r) => r[idx]);
}

import { readFileSync } from 'fs';

export type Row = Record<string, string>;

/** Parse one of the harness CSVs (plain comma-separated, no quoting). */
export function parseCsv(text: string): Row[] {
  const lines = text.split('\n').filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    return [];
  }
  const header = lines[0].split(',');
  return lines.slice(1).map((line) => {
    const parts = line.split(',');
    const row: Row = {};
    header.forEach((col, i) => {
      row[col] = parts[i] ?? '';
    });
    return row;
  });
}

export function readCsv(path: string): Row[] {
  return parseCsv(readFileSync(path, 'utf-8'));
}

/** Fail fast with the offending file and column when a schema drifts. */
export function requireColumns(rows: Row[], columns: string[], file: string): void {
  if (rows.length === 0) {
    throw new Error(`${file}: no data rows`);
  }
  for (const col of columns) {
    if (!(col in rows[0])) {
      throw new Error(`${file}: missing column "${col}"`);
    }
  }
}

export function num(row: Row, col: string): number {
  const v = Number(row[col]);
  if (!Number.isFinite(v)) {
    throw new Error(`non-numeric value "${row[col]}" in column "${col}"`);
  }
  return v;
}

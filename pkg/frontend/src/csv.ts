// Minimal CSV reading for the simulator's outputs: comma-separated,
// first line is the header, no quoting or escaping in the schema.

import * as fs from 'fs';

export interface Table {
  path: string;
  columns: string[];
  cells: string[][];
}

export function parseCsv(text: string, path = '<string>'): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) throw new Error(`no rows in ${path}`);
  const columns = lines[0].split(',');
  const cells = lines.slice(1).map((line) => line.split(','));
  if (cells.length === 0) throw new Error(`no rows in ${path}`);
  for (const row of cells) {
    if (row.length !== columns.length) {
      throw new Error(`ragged row in ${path}: ${row.length} fields, header has ${columns.length}`);
    }
  }
  return { path, columns, cells };
}

export function readCsv(path: string): Table {
  return parseCsv(fs.readFileSync(path, 'utf8'), path);
}

function columnIndex(table: Table, name: string): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new Error(`missing column ${name} in ${table.path}`);
  return idx;
}

export function numberColumn(table: Table, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.cells.map((row) => Number(row[idx]));
}

export function stringColumn(table: Table, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.cells.map((row) => row[idx]);
}

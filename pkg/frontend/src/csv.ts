/** Minimal CSV reader for the simulator's comma-separated outputs. */

export class MissingColumnError extends Error {
  constructor(column: string, available: string[]) {
    super(`missing column '${column}' (file has: ${available.join(", ")})`);
    this.name = "MissingColumnError";
  }
}

export class EmptyCsvError extends Error {
  constructor() {
    super("csv has a header but no data rows");
    this.name = "EmptyCsvError";
  }
}

export interface Table {
  header: string[];
  rows: string[][];
}

/** Split header + rows; the simulator never quotes or embeds commas. */
export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new EmptyCsvError();
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  if (rows.length === 0) throw new EmptyCsvError();
  return { header, rows };
}

/** Index of each requested column, or a named error. */
export function columnIndex(table: Table, columns: string[]): number[] {
  return columns.map((c) => {
    const i = table.header.indexOf(c);
    if (i < 0) throw new MissingColumnError(c, table.header);
    return i;
  });
}

/** Concatenate tables that share a header (multiple --in files). */
export function concatTables(tables: Table[]): Table {
  const [first, ...rest] = tables;
  for (const t of rest) {
    if (t.header.join(",") !== first.header.join(",")) {
      throw new Error(
        `input headers differ: '${first.header.join(",")}' vs '${t.header.join(",")}'`,
      );
    }
  }
  return { header: first.header, rows: tables.flatMap((t) => t.rows) };
}

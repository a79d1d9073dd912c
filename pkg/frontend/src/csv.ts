/**
 * Typed readers for the transfer-trajectory CSV tables.
 *
 * Each table starts with one `#` metadata comment, then a header row, then
 * numeric rows.  Schemas are fixed; any deviation raises a CsvError that
 * names the offending column so a caller can fix the producing run.
 */

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/** One parsed table: column-major numeric data plus header metadata. */
export interface Table {
  /** key=value pairs from the leading `#` comment lines. */
  meta: Record<string, string>;
  /** Column names exactly as in the header row. */
  columns: string[];
  /** rows[i][j] is row i of column columns[j]. */
  rows: number[][];
}

/** Orbit-shape history: semi-latus rectum, eccentricity, inclination. */
export interface ElementsRow {
  t_days: number;
  p_km: number;
  e: number;
  i_deg: number;
  arc: number;
}

/** In-plane and out-of-plane thrust-angle history. */
export interface AnglesRow {
  t_days: number;
  alpha_deg: number;
  beta_deg: number;
  arc: number;
}

/** Path resolved on rotating Earth-Moon axes, barycentric origin. */
export interface SynodicRow {
  epoch_s: number;
  x_km: number;
  y_km: number;
  z_km: number;
  r_earth_km: number;
  r_moon_km: number;
  arc: number;
}

export class CsvError extends Error {
  override name = "CsvError";
}

export const ELEMENTS_COLUMNS = ["t_days", "p_km", "e", "i_deg", "arc"];
export const ANGLES_COLUMNS = ["t_days", "alpha_deg", "beta_deg", "arc"];
export const SYNODIC_COLUMNS = [
  "epoch_s",
  "x_km",
  "y_km",
  "z_km",
  "r_earth_km",
  "r_moon_km",
  "arc",
];

// ---------------------------------------------------------------------------
// Generic table parser
// ---------------------------------------------------------------------------

/** Parse `# a=1 b=two` comment lines into {a: "1", b: "two"}. */
function parseMeta(lines: string[]): Record<string, string> {
  const meta: Record<string, string> = {};
  for (const line of lines) {
    for (const token of line.replace(/^#\s*/, "").split(/\s+/)) {
      const eq = token.indexOf("=");
      if (eq > 0) meta[token.slice(0, eq)] = token.slice(eq + 1);
    }
  }
  return meta;
}

/**
 * Parse a table against a fixed column schema.
 *
 * Errors name the first offending column: missing or misplaced header
 * columns, non-numeric cells, and short rows are all reported with the
 * column (and row) they occur in.
 */
export function parseTable(text: string, expected: string[]): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  const comments: string[] = [];
  let k = 0;
  while (k < lines.length && lines[k]!.startsWith("#")) {
    comments.push(lines[k]!);
    k += 1;
  }
  if (k >= lines.length) {
    throw new CsvError(`no header row; expected columns ${expected.join(",")}`);
  }

  const columns = lines[k]!.split(",").map((c) => c.trim());
  for (let j = 0; j < expected.length; j += 1) {
    if (columns[j] !== expected[j]) {
      const got = columns[j] === undefined ? "nothing" : `"${columns[j]}"`;
      throw new CsvError(
        `header column ${j + 1} must be "${expected[j]}", found ${got}`,
      );
    }
  }
  if (columns.length > expected.length) {
    throw new CsvError(
      `unexpected extra column "${columns[expected.length]}" in header`,
    );
  }

  const rows: number[][] = [];
  for (let i = k + 1; i < lines.length; i += 1) {
    const cells = lines[i]!.split(",");
    const row: number[] = [];
    for (let j = 0; j < expected.length; j += 1) {
      const cell = cells[j];
      if (cell === undefined || cell.trim() === "") {
        throw new CsvError(
          `row ${i - k}: missing value for column "${expected[j]}"`,
        );
      }
      const v = Number(cell);
      if (!Number.isFinite(v)) {
        throw new CsvError(
          `row ${i - k}: column "${expected[j]}" is not a finite number: "${cell.trim()}"`,
        );
      }
      row.push(v);
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new CsvError(`no data rows under column "${expected[0]}"`);
  }
  return { meta: parseMeta(comments), columns, rows };
}

/** Sweep direction from table metadata; +1 when absent. */
export function tableDirection(table: Table): 1 | -1 {
  return table.meta["direction"] === "-1" ? -1 : 1;
}

function checkArc(value: number, row: number): number {
  if (!Number.isInteger(value) || (value !== 0 && value !== 1)) {
    throw new CsvError(`row ${row}: column "arc" must be 0 or 1, found ${value}`);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Schema-specific readers
// ---------------------------------------------------------------------------

export function parseElements(text: string): { table: Table; rows: ElementsRow[] } {
  const table = parseTable(text, ELEMENTS_COLUMNS);
  const rows = table.rows.map((r, i) => ({
    t_days: r[0]!,
    p_km: r[1]!,
    e: r[2]!,
    i_deg: r[3]!,
    arc: checkArc(r[4]!, i + 1),
  }));
  return { table, rows };
}

export function parseAngles(text: string): { table: Table; rows: AnglesRow[] } {
  const table = parseTable(text, ANGLES_COLUMNS);
  const rows = table.rows.map((r, i) => ({
    t_days: r[0]!,
    alpha_deg: r[1]!,
    beta_deg: r[2]!,
    arc: checkArc(r[3]!, i + 1),
  }));
  return { table, rows };
}

export function parseSynodic(text: string): { table: Table; rows: SynodicRow[] } {
  const table = parseTable(text, SYNODIC_COLUMNS);
  const rows = table.rows.map((r, i) => ({
    epoch_s: r[0]!,
    x_km: r[1]!,
    y_km: r[2]!,
    z_km: r[3]!,
    r_earth_km: r[4]!,
    r_moon_km: r[5]!,
    arc: checkArc(r[6]!, i + 1),
  }));
  return { table, rows };
}

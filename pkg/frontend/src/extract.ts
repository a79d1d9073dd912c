/**
 * CSV-to-plotted-data extraction.
 *
 * Everything a chart draws is computed here from the parsed tables:
 * per-panel series, angle wrapping, polyline segmentation, and the 3-D
 * projection for rotating-frame paths.  The chart layer adds only pixels,
 * so golden files over these structures pin the rendered content.
 */

import {
  parseAngles,
  parseElements,
  parseSynodic,
  tableDirection,
  type SynodicRow,
} from "./csv.js";

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

export type PlotKind = "elements" | "angles" | "synodic3d";

/** Contiguous run of rows sharing one arc id; [start, end) indices. */
export interface ArcRun {
  arc: number;
  start: number;
  end: number;
}

/** One stacked panel: label carries the unit from the CSV header. */
export interface Panel {
  label: string;
  values: number[];
  /** Index ranges drawn as unbroken polylines (splits at wrap seams). */
  segments: [number, number][];
}

export interface ElementsData {
  kind: "elements";
  direction: 1 | -1;
  t_days: number[];
  panels: Panel[];
  arcRuns: ArcRun[];
}

export interface AnglesData {
  kind: "angles";
  direction: 1 | -1;
  t_days: number[];
  panels: Panel[];
  arcRuns: ArcRun[];
}

export interface Synodic3dData {
  kind: "synodic3d";
  direction: 1 | -1;
  /** Orthographic screen coordinates, kilometers. */
  xy: [number, number][];
  /** Projected origin marker (the rotating-frame barycenter). */
  origin: [number, number];
  arcRuns: ArcRun[];
  /** First and last 3-D points coincide (periodic input). */
  closed: boolean;
}

export type Extracted = ElementsData | AnglesData | Synodic3dData;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/** Contiguous [start, end) runs of the arc column. */
export function arcRuns(arcs: number[]): ArcRun[] {
  const runs: ArcRun[] = [];
  let start = 0;
  for (let i = 1; i <= arcs.length; i += 1) {
    if (i === arcs.length || arcs[i] !== arcs[start]) {
      runs.push({ arc: arcs[start]!, start, end: i });
      start = i;
    }
  }
  return runs;
}

/** Wrap an angle in degrees into (-180, 180]. */
export function wrapDeg(deg: number): number {
  let w = deg % 360;
  if (w <= -180) w += 360;
  if (w > 180) w -= 360;
  return w;
}

/**
 * Split a wrapped angle series into polyline segments, breaking wherever
 * consecutive samples jump across the +/-180 deg seam.
 */
export function seamSegments(values: number[], jump = 180): [number, number][] {
  const segments: [number, number][] = [];
  let start = 0;
  for (let i = 1; i <= values.length; i += 1) {
    if (i === values.length || Math.abs(values[i]! - values[i - 1]!) > jump) {
      segments.push([start, i]);
      start = i;
    }
  }
  return segments;
}

function wholeSegment(n: number): [number, number][] {
  return [[0, n]];
}

// ---------------------------------------------------------------------------
// Per-kind extraction
// ---------------------------------------------------------------------------

export function extractElements(text: string): ElementsData {
  const { table, rows } = parseElements(text);
  const n = rows.length;
  return {
    kind: "elements",
    direction: tableDirection(table),
    t_days: rows.map((r) => r.t_days),
    panels: [
      { label: "p (km)", values: rows.map((r) => r.p_km), segments: wholeSegment(n) },
      { label: "e", values: rows.map((r) => r.e), segments: wholeSegment(n) },
      { label: "i (deg)", values: rows.map((r) => r.i_deg), segments: wholeSegment(n) },
    ],
    arcRuns: arcRuns(rows.map((r) => r.arc)),
  };
}

export function extractAngles(text: string): AnglesData {
  const { table, rows } = parseAngles(text);
  const alpha = rows.map((r) => wrapDeg(r.alpha_deg));
  const beta = rows.map((r) => r.beta_deg);
  return {
    kind: "angles",
    direction: tableDirection(table),
    t_days: rows.map((r) => r.t_days),
    panels: [
      { label: "alpha (deg)", values: alpha, segments: seamSegments(alpha) },
      { label: "beta (deg)", values: beta, segments: wholeSegment(beta.length) },
    ],
    arcRuns: arcRuns(rows.map((r) => r.arc)),
  };
}

/** Fixed orthographic view: azimuth then elevation, both in radians. */
const VIEW_AZ = (35 * Math.PI) / 180;
const VIEW_EL = (25 * Math.PI) / 180;

/** Project one 3-D point (km) onto deterministic screen axes (km). */
export function project(x: number, y: number, z: number): [number, number] {
  const right: [number, number, number] = [-Math.sin(VIEW_AZ), Math.cos(VIEW_AZ), 0];
  const up: [number, number, number] = [
    -Math.cos(VIEW_AZ) * Math.sin(VIEW_EL),
    -Math.sin(VIEW_AZ) * Math.sin(VIEW_EL),
    Math.cos(VIEW_EL),
  ];
  return [
    x * right[0] + y * right[1] + z * right[2],
    x * up[0] + y * up[1] + z * up[2],
  ];
}

function isClosed(rows: SynodicRow[]): boolean {
  const a = rows[0]!;
  const b = rows[rows.length - 1]!;
  const gap = Math.hypot(a.x_km - b.x_km, a.y_km - b.y_km, a.z_km - b.z_km);
  const span = Math.max(
    ...rows.map((r) => Math.hypot(r.x_km, r.y_km, r.z_km)),
  );
  return gap < 1e-6 * Math.max(span, 1);
}

export function extractSynodic3d(text: string): Synodic3dData {
  const { table, rows } = parseSynodic(text);
  return {
    kind: "synodic3d",
    direction: tableDirection(table),
    xy: rows.map((r) => project(r.x_km, r.y_km, r.z_km)),
    origin: project(0, 0, 0),
    arcRuns: arcRuns(rows.map((r) => r.arc)),
    closed: isClosed(rows),
  };
}

export function extract(kind: PlotKind, text: string): Extracted {
  switch (kind) {
    case "elements":
      return extractElements(text);
    case "angles":
      return extractAngles(text);
    case "synodic3d":
      return extractSynodic3d(text);
  }
}

/**
 * Hand-rolled SVG charts over extracted plot data.
 *
 * Two layouts: vertically stacked time-series panels sharing one time
 * axis, and an equal-aspect projected-path chart for rotating-frame
 * trajectories.  Output dimensions are fixed per layout so identical
 * inputs give byte-identical files.
 */

import type {
  AnglesData,
  ArcRun,
  ElementsData,
  Panel,
  Synodic3dData,
} from "./extract.js";

// ---------------------------------------------------------------------------
// Layout constants (fixed => deterministic output dimensions)
// ---------------------------------------------------------------------------

const W = 700;
const PANEL_H = 150;
const PANEL_GAP = 16;
const MT = 40; // top margin (title)
const MB = 44; // bottom margin (time axis)
const ML = 72;
const MR = 20;
const PATH_H = 560;

const ARC_COLORS: Record<number, string> = { 0: "#4361ee", 1: "#e63946" };
const ARC_LABELS: Record<number, string> = {
  0: "selenocentric arc",
  1: "geocentric arc",
};

// ---------------------------------------------------------------------------
// SVG helpers
// ---------------------------------------------------------------------------

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const nice = [1, 2, 5, 10].map((m) => m * mag);
  const step = nice.find((n) => n >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 0.01; v += step) ticks.push(v);
  return ticks;
}

/** Decimal places that resolve one tick step. */
function fmtTick(v: number, step: number): string {
  const decimals = Math.min(6, Math.max(0, -Math.floor(Math.log10(step))));
  const s = v.toFixed(decimals);
  return s === "-0" ? "0" : s;
}

function padRange(lo: number, hi: number): [number, number] {
  let pad = (hi - lo) * 0.06;
  if (pad === 0) pad = Math.max(1e-6, Math.abs(hi) * 1e-3);
  return [lo - pad, hi + pad];
}

interface Scale {
  (v: number): number;
}

function linear(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** Intersect polyline segments with arc runs so color never bridges arcs. */
function coloredPieces(
  segments: [number, number][],
  runs: ArcRun[],
): { arc: number; start: number; end: number }[] {
  const pieces: { arc: number; start: number; end: number }[] = [];
  for (const [s, e] of segments) {
    for (const run of runs) {
      const start = Math.max(s, run.start);
      const end = Math.min(e, run.end);
      if (end - start >= 2) pieces.push({ arc: run.arc, start, end });
    }
  }
  return pieces;
}

function legendBlock(runs: ArcRun[], x: number, y: number): string {
  const arcs = [...new Set(runs.map((r) => r.arc))].sort();
  const labels = arcs.map((a) => ARC_LABELS[a] ?? `arc ${a}`);
  const boxW = Math.max(...labels.map((l) => l.length)) * 5.2 + 30;
  const boxH = arcs.length * 12 + 6;
  let s = `<rect x="${x - boxW}" y="${y}" width="${boxW}" height="${boxH}" rx="2" fill="white" fill-opacity="0.85" stroke="#ddd" stroke-width="0.5"/>\n`;
  arcs.forEach((a, i) => {
    const ly = y + 9 + i * 12;
    s += `<line x1="${x - boxW + 6}" y1="${ly}" x2="${x - boxW + 22}" y2="${ly}" stroke="${ARC_COLORS[a] ?? "#333"}" stroke-width="1.5"/>\n`;
    s += `<text x="${x - boxW + 26}" y="${ly + 3}" font-size="7" fill="#444">${esc(labels[i]!)}</text>\n`;
  });
  return s;
}

// ---------------------------------------------------------------------------
// Stacked time-series panels
// ---------------------------------------------------------------------------

export function stackedPanelHeight(panelCount: number): number {
  return MT + panelCount * PANEL_H + (panelCount - 1) * PANEL_GAP + MB;
}

/**
 * Render time-series panels stacked over one shared time axis.  Lines are
 * colored by arc and split at segment boundaries (wrap seams, arc flips).
 */
export function renderStackedPanels(
  data: ElementsData | AnglesData,
  title: string,
): string {
  const { t_days, panels, arcRuns: runs } = data;
  const H = stackedPanelHeight(panels.length);
  const pw = W - ML - MR;

  const [t0, t1] = padRange(Math.min(...t_days), Math.max(...t_days));
  const xOf = linear(t0, t1, ML, ML + pw);

  let s = `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ML}" y="18" font-size="11" font-weight="600" fill="#222">${esc(title)}</text>\n`;
  s += `<text x="${ML}" y="30" font-size="7.5" fill="#888">${t_days.length} samples · direction ${data.direction > 0 ? "forward" : "backward"}</text>\n`;

  const xTicks = niceTicks(t0, t1, 7);
  const xStep = xTicks.length > 1 ? xTicks[1]! - xTicks[0]! : 1;

  panels.forEach((panel: Panel, pi: number) => {
    const top = MT + pi * (PANEL_H + PANEL_GAP);
    const bottom = top + PANEL_H;
    const [lo, hi] = padRange(
      Math.min(...panel.values),
      Math.max(...panel.values),
    );
    const yOf = linear(lo, hi, bottom, top);

    // Grid + frame
    const yTicks = niceTicks(lo, hi, 4);
    const yStep = yTicks.length > 1 ? yTicks[1]! - yTicks[0]! : 1;
    for (const v of yTicks) {
      const y = yOf(v).toFixed(1);
      s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
      s += `<text x="${ML - 6}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="7" fill="#666">${fmtTick(v, yStep)}</text>\n`;
    }
    for (const t of xTicks) {
      const x = xOf(t).toFixed(1);
      s += `<line x1="${x}" y1="${top}" x2="${x}" y2="${bottom}" stroke="#f4f4f4" stroke-width="0.5"/>\n`;
    }
    s += `<rect x="${ML}" y="${top}" width="${pw}" height="${PANEL_H}" fill="none" stroke="#333" stroke-width="0.7"/>\n`;

    // Series, colored by arc, broken at segment boundaries
    for (const piece of coloredPieces(panel.segments, runs)) {
      const pts: string[] = [];
      for (let i = piece.start; i < piece.end; i += 1) {
        pts.push(`${xOf(t_days[i]!).toFixed(1)},${yOf(panel.values[i]!).toFixed(1)}`);
      }
      s += `<polyline fill="none" stroke="${ARC_COLORS[piece.arc] ?? "#333"}" stroke-width="1.1" points="${pts.join(" ")}"/>\n`;
    }

    s += `<text x="14" y="${(top + PANEL_H / 2).toFixed(1)}" text-anchor="middle" font-size="8.5" fill="#333" transform="rotate(-90,14,${(top + PANEL_H / 2).toFixed(1)})">${esc(panel.label)}</text>\n`;
  });

  // Shared time axis under the last panel
  const axisY = MT + panels.length * PANEL_H + (panels.length - 1) * PANEL_GAP;
  for (const t of xTicks) {
    const x = xOf(t).toFixed(1);
    s += `<line x1="${x}" y1="${axisY}" x2="${x}" y2="${axisY + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${x}" y="${axisY + 14}" text-anchor="middle" font-size="7" fill="#666">${fmtTick(t, xStep)}</text>\n`;
  }
  s += `<text x="${ML + pw / 2}" y="${H - 8}" text-anchor="middle" font-size="8.5" fill="#333">time (days)</text>\n`;

  s += legendBlock(runs, ML + pw - 6, MT + 6);
  s += `</svg>\n`;
  return s;
}

// ---------------------------------------------------------------------------
// Projected rotating-frame path
// ---------------------------------------------------------------------------

/**
 * Render the projected 3-D path with equal axis scales, the barycenter
 * marker, and start/end markers.
 */
export function renderPath(data: Synodic3dData, title: string): string {
  const H = PATH_H;
  const pw = W - ML - MR;
  const ph = H - MT - MB;

  const xs = [...data.xy.map((p) => p[0]), data.origin[0]];
  const ys = [...data.xy.map((p) => p[1]), data.origin[1]];
  const [x0, x1] = padRange(Math.min(...xs), Math.max(...xs));
  const [y0, y1] = padRange(Math.min(...ys), Math.max(...ys));

  // Equal-aspect: one km-per-pixel scale for both axes, centered
  const scale = Math.min(pw / (x1 - x0), ph / (y1 - y0));
  const cx = (x0 + x1) / 2;
  const cy = (y0 + y1) / 2;
  const xOf: Scale = (v) => ML + pw / 2 + (v - cx) * scale;
  const yOf: Scale = (v) => MT + ph / 2 - (v - cy) * scale;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ML}" y="18" font-size="11" font-weight="600" fill="#222">${esc(title)}</text>\n`;
  s += `<text x="${ML}" y="30" font-size="7.5" fill="#888">rotating Earth-Moon frame, barycentric origin · orthographic view · ${data.xy.length} samples${data.closed ? " · closed path" : ""}</text>\n`;

  // Axis ticks in kilometers on both screen axes
  const xTicks = niceTicks(cx - pw / 2 / scale, cx + pw / 2 / scale, 7);
  const xTickStep = xTicks.length > 1 ? xTicks[1]! - xTicks[0]! : 1;
  for (const v of xTicks) {
    const x = xOf(v);
    if (x < ML || x > ML + pw) continue;
    s += `<line x1="${x.toFixed(1)}" y1="${MT + ph}" x2="${x.toFixed(1)}" y2="${MT + ph + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${x.toFixed(1)}" y="${MT + ph + 14}" text-anchor="middle" font-size="7" fill="#666">${fmtTick(v, xTickStep)}</text>\n`;
  }
  const yTicks = niceTicks(cy - ph / 2 / scale, cy + ph / 2 / scale, 6);
  const yTickStep = yTicks.length > 1 ? yTicks[1]! - yTicks[0]! : 1;
  for (const v of yTicks) {
    const y = yOf(v);
    if (y < MT || y > MT + ph) continue;
    s += `<line x1="${ML - 4}" y1="${y.toFixed(1)}" x2="${ML}" y2="${y.toFixed(1)}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${ML - 7}" y="${(y + 2.5).toFixed(1)}" text-anchor="end" font-size="7" fill="#666">${fmtTick(v, yTickStep)}</text>\n`;
  }
  s += `<rect x="${ML}" y="${MT}" width="${pw}" height="${ph}" fill="none" stroke="#333" stroke-width="0.7"/>\n`;

  // Path, colored by arc
  for (const run of data.arcRuns) {
    if (run.end - run.start < 2) continue;
    const pts: string[] = [];
    for (let i = run.start; i < run.end; i += 1) {
      const [px, py] = data.xy[i]!;
      pts.push(`${xOf(px).toFixed(1)},${yOf(py).toFixed(1)}`);
    }
    s += `<polyline fill="none" stroke="${ARC_COLORS[run.arc] ?? "#333"}" stroke-width="1.1" points="${pts.join(" ")}"/>\n`;
  }

  // Barycenter cross
  const [ox, oy] = [xOf(data.origin[0]), yOf(data.origin[1])];
  s += `<line x1="${(ox - 5).toFixed(1)}" y1="${oy.toFixed(1)}" x2="${(ox + 5).toFixed(1)}" y2="${oy.toFixed(1)}" stroke="#555" stroke-width="1"/>\n`;
  s += `<line x1="${ox.toFixed(1)}" y1="${(oy - 5).toFixed(1)}" x2="${ox.toFixed(1)}" y2="${(oy + 5).toFixed(1)}" stroke="#555" stroke-width="1"/>\n`;
  s += `<text x="${(ox + 7).toFixed(1)}" y="${(oy - 4).toFixed(1)}" font-size="7" fill="#555">barycenter</text>\n`;

  // Start and end markers
  const [sx, sy] = data.xy[0]!;
  const [ex, ey] = data.xy[data.xy.length - 1]!;
  s += `<circle cx="${xOf(sx).toFixed(1)}" cy="${yOf(sy).toFixed(1)}" r="3" fill="#2d6a4f"/>\n`;
  s += `<rect x="${(xOf(ex) - 2.6).toFixed(1)}" y="${(yOf(ey) - 2.6).toFixed(1)}" width="5.2" height="5.2" fill="#222"/>\n`;

  s += `<text x="${ML + pw / 2}" y="${H - 8}" text-anchor="middle" font-size="8.5" fill="#333">projected position (km)</text>\n`;
  s += legendBlock(data.arcRuns, ML + pw - 6, MT + 6);
  s += `</svg>\n`;
  return s;
}

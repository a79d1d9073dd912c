/**
 * Figure renderer: one CSV table in, one SVG file out.
 *
 * Usage:
 *   moongate-plots --kind elements  --in elements.csv --out elements.svg
 *   moongate-plots --kind angles    --in angles.csv   --out angles.svg
 *   moongate-plots --kind synodic3d --in synodic.csv  --out transfer.svg
 *
 * Inputs are read-only; the only write is the output image.
 */

import { readFileSync, writeFileSync } from "node:fs";
import path from "node:path";
import { parseArgs } from "node:util";

import { renderPath, renderStackedPanels } from "./chart.js";
import { extract, type PlotKind } from "./extract.js";

export const KINDS: PlotKind[] = ["elements", "angles", "synodic3d"];

const TITLES: Record<PlotKind, string> = {
  elements: "Orbit elements p, e, i",
  angles: "Thrust angles alpha, beta",
  synodic3d: "Transfer in the rotating Earth-Moon frame",
};

/** Render one CSV text to SVG markup; pure aside from the clock-free math. */
export function renderToSvg(kind: PlotKind, csvText: string, name: string): string {
  const data = extract(kind, csvText);
  const title = `${TITLES[kind]} — ${name}`;
  if (data.kind === "synodic3d") return renderPath(data, title);
  return renderStackedPanels(data, title);
}

export function main(argv: string[]): number {
  let values: { kind?: string; in?: string; out?: string; help?: boolean };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    }));
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }

  if (values.help || (!values.kind && !values.in && !values.out)) {
    console.log(
      "usage: moongate-plots --kind {elements|angles|synodic3d} --in TABLE.csv --out FIG.svg",
    );
    return values.help ? 0 : 2;
  }
  for (const flag of ["kind", "in", "out"] as const) {
    if (!values[flag]) {
      console.error(`missing required flag --${flag}`);
      return 2;
    }
  }
  const kind = values.kind as PlotKind;
  if (!KINDS.includes(kind)) {
    console.error(
      `unknown kind "${values.kind}"; expected one of ${KINDS.join(", ")}`,
    );
    return 2;
  }

  let text: string;
  try {
    text = readFileSync(values.in!, "utf-8");
  } catch (err) {
    console.error(`cannot read ${values.in}: ${(err as Error).message}`);
    return 1;
  }

  let svg: string;
  try {
    svg = renderToSvg(kind, text, path.basename(values.in!));
  } catch (err) {
    console.error(`${values.in}: ${(err as Error).message}`);
    return 1;
  }

  writeFileSync(values.out!, svg);
  console.log(`wrote ${values.out}`);
  return 0;
}

/**
 * Regenerate the golden extraction files under test/golden/ from the
 * fixture CSVs.  Run after any deliberate change to the extraction layer:
 *
 *   npm run golden
 */

import { readFileSync, writeFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { extract, type PlotKind } from "./extract.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const FIXTURES = path.join(HERE, "..", "test", "fixtures");
const GOLDEN = path.join(HERE, "..", "test", "golden");

const CASES: [PlotKind, string, string][] = [
  ["elements", "elements.csv", "elements.json"],
  ["angles", "angles.csv", "angles.json"],
  ["synodic3d", "synodic.csv", "synodic3d.json"],
  ["synodic3d", "synodic_periodic.csv", "synodic3d_periodic.json"],
];

for (const [kind, csvName, goldenName] of CASES) {
  const text = readFileSync(path.join(FIXTURES, csvName), "utf-8");
  const data = extract(kind, text);
  const out = path.join(GOLDEN, goldenName);
  writeFileSync(out, JSON.stringify(data, null, 1) + "\n");
  console.log(`wrote ${out}`);
}

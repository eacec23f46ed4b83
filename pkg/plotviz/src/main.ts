/**
 * CLI: render convergence panels from trace CSVs.
 *
 * Usage:
 *   plotviz --dir <directory of <system>__<algo>.csv files> [--out fig.svg]
 *   plotviz --manifest <panels.json> [--out fig.svg]
 *
 * The manifest is a JSON array of { "title": ..., "traces": [{ "path": ...,
 * "label": ... }] } objects. Inputs are only ever read.
 */

import { readFileSync, readdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { buildPanel, panelsFromFiles, type PanelSpec } from "./panels.js";
import { renderFigure } from "./svg.js";

function fail(message: string): never {
  console.error(`plotviz: ${message}`);
  process.exit(2);
}

function parseArgs(argv: string[]): { dir?: string; manifest?: string; out: string } {
  const out: { dir?: string; manifest?: string; out: string } = { out: "figure.svg" };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--dir":
        out.dir = argv[++i];
        break;
      case "--manifest":
        out.manifest = argv[++i];
        break;
      case "--out":
        out.out = argv[++i];
        break;
      default:
        fail(`unknown argument ${argv[i]}`);
    }
  }
  if ((out.dir === undefined) === (out.manifest === undefined)) {
    fail("pass exactly one of --dir or --manifest");
  }
  return out;
}

export function loadManifest(path: string): PanelSpec[] {
  const doc = JSON.parse(readFileSync(path, "utf-8"));
  if (!Array.isArray(doc) || doc.length === 0) {
    throw new Error("manifest must be a non-empty array of panels");
  }
  return doc.map((entry, i) => {
    if (typeof entry?.title !== "string" || !Array.isArray(entry?.traces)) {
      throw new Error(`manifest[${i}] needs a title and a traces array`);
    }
    return {
      title: entry.title,
      traces: entry.traces.map((t: unknown, j: number) => {
        const ref = t as { path?: unknown; label?: unknown };
        if (typeof ref.path !== "string" || typeof ref.label !== "string") {
          throw new Error(`manifest[${i}].traces[${j}] needs string path and label`);
        }
        return { path: ref.path, label: ref.label };
      }),
    };
  });
}

function main(): void {
  const args = parseArgs(process.argv.slice(2));
  let specs: PanelSpec[];
  if (args.dir !== undefined) {
    const files = readdirSync(args.dir)
      .filter((name) => name.endsWith(".csv") && !name.startsWith("summary"))
      .map((name) => join(args.dir!, name));
    if (files.length === 0) {
      fail(`no trace CSVs found in ${args.dir}`);
    }
    specs = panelsFromFiles(files);
  } else {
    specs = loadManifest(args.manifest!);
  }
  try {
    const panels = specs.map((spec) => buildPanel(spec));
    writeFileSync(args.out, renderFigure(panels));
    console.log(`wrote ${args.out} (${panels.length} panel${panels.length === 1 ? "" : "s"})`);
  } catch (err) {
    console.error(`plotviz: ${(err as Error).message}`);
    process.exit(1);
  }
}

main();

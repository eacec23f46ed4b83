import { createHash } from "node:crypto";
import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { TRACE_HEADER, parseTrace } from "../src/csv.js";
import { buildPanel, gapSeries, panelsFromFiles } from "../src/panels.js";
import { renderFigure } from "../src/svg.js";

const FIXTURES = join(__dirname, "fixtures");

function fixtureTracePaths(): string[] {
  return readdirSync(FIXTURES)
    .filter((name) => name.endsWith(".csv") && !name.startsWith("summary"))
    .map((name) => join(FIXTURES, name));
}

function sha256(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

describe("panel assembly", () => {
  it("groups system__algorithm files into sorted panels", () => {
    const specs = panelsFromFiles(fixtureTracePaths());
    expect(specs.map((s) => s.title)).toEqual([
      "doyle",
      "nonminimal-lqg",
      "scalar",
      "vanishing-hessian",
    ]);
    for (const spec of specs) {
      expect(spec.traces.map((t) => t.label)).toEqual(["gd", "rgd_w100", "rgd_w111"]);
    }
  });

  it("gap curves are truncated at the first non-positive entry", () => {
    const records = parseTrace(
      [TRACE_HEADER, "0,1,1,1,0.5,1", "1,1,1,1,0.25,1", "2,1,1,1,0.0,1", "3,1,1,1,0.1,1"].join("\n"),
    );
    expect(gapSeries(records)).toEqual([
      [0, 0.5],
      [1, 0.25],
    ]);
  });

  it("falls back to cost with a relabelled axis when no trace has a gap", () => {
    const noOracle = [TRACE_HEADER, "0,2.0,1,1,,1", "1,1.5,1,1,,1"].join("\n");
    const panel = buildPanel(
      { title: "x", traces: [{ path: "mem.csv", label: "gd" }] },
      () => noOracle,
    );
    expect(panel.yLabel).toBe("cost");
    expect(panel.curves[0].points).toEqual([
      [0, 2.0],
      [1, 1.5],
    ]);
  });

  it("rejects duplicate labels inside a panel", () => {
    expect(() =>
      buildPanel(
        {
          title: "x",
          traces: [
            { path: "a.csv", label: "gd" },
            { path: "b.csv", label: "gd" },
          ],
        },
        () => `${TRACE_HEADER}\n0,1,1,1,,1`,
      ),
    ).toThrow(/duplicate label/);
  });
});

describe("figure rendering on real comparison output", () => {
  it("renders a 2x2 grid with three labelled monotone curves per panel, without touching inputs", () => {
    const paths = fixtureTracePaths();
    const hashesBefore = paths.map(sha256);

    const specs = panelsFromFiles(paths);
    const panels = specs.map((spec) => buildPanel(spec));
    expect(panels).toHaveLength(4);

    for (const panel of panels) {
      expect(panel.curves).toHaveLength(3);
      for (const curve of panel.curves) {
        const values = curve.points.map(([, y]) => y);
        for (let i = 1; i < values.length; i++) {
          expect(values[i]).toBeLessThanOrEqual(values[i - 1]);
        }
        expect(values.length).toBeGreaterThan(0);
      }
    }

    const svg = renderFigure(panels);
    // 2x2 layout: four panel groups inside a two-column canvas
    expect(svg.match(/<g class="panel"/g)).toHaveLength(4);
    expect(svg).toContain('width="760"'); // 2 columns x 380
    expect(svg).toContain('height="560"'); // 2 rows x 280
    for (const label of ["gd", "rgd_w100", "rgd_w111"]) {
      expect(svg).toContain(`>${label}</text>`);
      expect(svg).toContain(`data-label="${label}"`);
    }
    for (const title of ["doyle", "nonminimal-lqg", "scalar", "vanishing-hessian"]) {
      expect(svg).toContain(`data-title="${title}"`);
    }

    // deterministic output, inputs untouched
    const svgAgain = renderFigure(specs.map((spec) => buildPanel(spec)));
    expect(svgAgain).toBe(svg);
    expect(paths.map(sha256)).toEqual(hashesBefore);
  });

  it("renders a single panel for a single system", () => {
    const paths = fixtureTracePaths().filter((p) => p.includes("scalar__"));
    const panels = panelsFromFiles(paths).map((spec) => buildPanel(spec));
    const svg = renderFigure(panels);
    expect(svg.match(/<g class="panel"/g)).toHaveLength(1);
    expect(svg).toContain('width="380"');
  });
});

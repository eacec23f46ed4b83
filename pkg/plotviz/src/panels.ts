/**
 * Panel assembly: each panel shows one system with one curve per
 * algorithm/metric label. Curves plot the optimality gap against the
 * iteration index; when no trace in the panel carries a gap column the
 * panel falls back to plotting the raw cost and labels its axis so.
 */

import { readFileSync } from "node:fs";
import { basename } from "node:path";
import { parseTrace, type TraceRecord } from "./csv.js";

export interface TraceRef {
  path: string;
  label: string;
}

export interface PanelSpec {
  title: string;
  traces: TraceRef[];
}

export interface Curve {
  label: string;
  /** [iteration, value] pairs, already truncated for log plotting. */
  points: Array<[number, number]>;
}

export interface PanelData {
  title: string;
  yLabel: "gap" | "cost";
  curves: Curve[];
}

/** Gap series truncated at the first non-positive entry (log axis). */
export function gapSeries(records: TraceRecord[]): Array<[number, number]> {
  const points: Array<[number, number]> = [];
  for (const rec of records) {
    if (rec.gap === null || rec.gap <= 0) break;
    points.push([rec.iter, rec.gap]);
  }
  return points;
}

export function costSeries(records: TraceRecord[]): Array<[number, number]> {
  return records.filter((rec) => rec.cost > 0).map((rec) => [rec.iter, rec.cost]);
}

export function buildPanel(spec: PanelSpec, readText: (path: string) => string = defaultRead): PanelData {
  const labels = new Set<string>();
  for (const ref of spec.traces) {
    if (labels.has(ref.label)) {
      throw new Error(`panel ${JSON.stringify(spec.title)}: duplicate label ${JSON.stringify(ref.label)}`);
    }
    labels.add(ref.label);
  }
  const parsed = spec.traces.map((ref) => ({
    label: ref.label,
    records: parseTrace(readText(ref.path), basename(ref.path)),
  }));
  const anyGap = parsed.some(({ records }) => records.some((rec) => rec.gap !== null && rec.gap > 0));
  const yLabel = anyGap ? "gap" : "cost";
  const curves = parsed.map(({ label, records }) => ({
    label,
    points: anyGap ? gapSeries(records) : costSeries(records),
  }));
  return { title: spec.title, yLabel, curves };
}

function defaultRead(path: string): string {
  return readFileSync(path, "utf-8");
}

/**
 * Group `<system>__<algorithm>.csv` files into one panel per system, curves
 * labelled by algorithm; systems and labels are sorted for a deterministic
 * layout.
 */
export function panelsFromFiles(paths: string[]): PanelSpec[] {
  const bySystem = new Map<string, TraceRef[]>();
  for (const path of paths) {
    const name = basename(path).replace(/\.csv$/, "");
    const sep = name.indexOf("__");
    const system = sep >= 0 ? name.slice(0, sep) : name;
    const label = sep >= 0 ? name.slice(sep + 2) : name;
    const refs = bySystem.get(system) ?? [];
    refs.push({ path, label });
    bySystem.set(system, refs);
  }
  return [...bySystem.keys()].sort().map((system) => ({
    title: system,
    traces: bySystem.get(system)!.slice().sort((a, b) => a.label.localeCompare(b.label)),
  }));
}

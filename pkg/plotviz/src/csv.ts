/**
 * Strict reader for optimizer trace CSVs.
 *
 * Schema: header exactly `iter,cost,grad_norm,step,gap,wall_ms`, rows ordered
 * by iteration from 0. The gap field is empty when the run had no oracle
 * value to compare against.
 */

export const TRACE_HEADER = "iter,cost,grad_norm,step,gap,wall_ms";

export interface TraceRecord {
  iter: number;
  cost: number;
  gradNorm: number;
  step: number;
  gap: number | null;
  wallMs: number;
}

export class SchemaError extends Error {}

function parseNumber(field: string, where: string): number {
  const value = Number(field);
  if (field.trim() === "" || Number.isNaN(value)) {
    throw new SchemaError(`${where}: not a number: ${JSON.stringify(field)}`);
  }
  return value;
}

export function parseTrace(text: string, name = "<trace>"): TraceRecord[] {
  const lines = text.split(/\r?\n/).filter((line, i, all) => !(line === "" && i === all.length - 1));
  if (lines.length === 0 || lines[0] !== TRACE_HEADER) {
    throw new SchemaError(
      `${name}: header mismatch: expected ${JSON.stringify(TRACE_HEADER)}, got ${JSON.stringify(lines[0] ?? "")}`,
    );
  }
  const records: TraceRecord[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 6) {
      throw new SchemaError(`${name}: row ${i} has ${parts.length} fields, expected 6`);
    }
    const record: TraceRecord = {
      iter: parseNumber(parts[0], `${name}: row ${i} iter`),
      cost: parseNumber(parts[1], `${name}: row ${i} cost`),
      gradNorm: parseNumber(parts[2], `${name}: row ${i} grad_norm`),
      step: parseNumber(parts[3], `${name}: row ${i} step`),
      gap: parts[4] === "" ? null : parseNumber(parts[4], `${name}: row ${i} gap`),
      wallMs: parseNumber(parts[5], `${name}: row ${i} wall_ms`),
    };
    if (!Number.isInteger(record.iter)) {
      throw new SchemaError(`${name}: row ${i}: iter must be an integer`);
    }
    if (records.length > 0 && record.iter <= records[records.length - 1].iter) {
      throw new SchemaError(`${name}: row ${i}: iterations must be strictly ascending`);
    }
    records.push(record);
  }
  return records;
}

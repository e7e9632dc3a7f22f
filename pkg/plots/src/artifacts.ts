/**
 * Readers for the persisted artifacts (CSV via papaparse, JSON via zod).
 */

import * as fs from "node:fs";
import Papa from "papaparse";
import {
  ArtifactError,
  DataMeta,
  DataMetaSchema,
  DensitySummary,
  DrawStore,
  DrawStoreMetaSchema,
  StandardizedDraws,
} from "./schemas.js";

function readFile(path: string): string {
  if (!fs.existsSync(path)) {
    throw new ArtifactError(path, "artifact not found");
  }
  return fs.readFileSync(path, "utf8");
}

function parseCsv(path: string): Record<string, string>[] {
  const parsed = Papa.parse<Record<string, string>>(readFile(path).trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new ArtifactError(path, `CSV parse error: ${parsed.errors[0].message}`);
  }
  return parsed.data;
}

function num(row: Record<string, string>, field: string, path: string): number {
  const raw = row[field];
  const value = Number(raw);
  if (raw === undefined || Number.isNaN(value)) {
    throw new ArtifactError(path, `missing or non-numeric field '${field}'`);
  }
  return value;
}

export function readDataMeta(path: string): DataMeta {
  const parsed = DataMetaSchema.safeParse(JSON.parse(readFile(path)));
  if (!parsed.success) {
    throw new ArtifactError(path, `data metadata does not match schema (${parsed.error.issues[0]?.message})`);
  }
  return parsed.data;
}

export function readDrawStore(csvPath: string, metaPath: string): DrawStore {
  const metaParsed = DrawStoreMetaSchema.safeParse(JSON.parse(readFile(metaPath)));
  if (!metaParsed.success) {
    throw new ArtifactError(metaPath, `draw-store metadata does not match schema (${metaParsed.error.issues[0]?.message})`);
  }
  const meta = metaParsed.data;
  const rows = parseCsv(csvPath);
  if (rows.length === 0) {
    throw new ArtifactError(csvPath, "draw store is empty");
  }
  const r = meta.R;
  const q = rows.map((row) => {
    const matrix: number[][] = [];
    for (let i = 0; i < r; i++) {
      const line: number[] = [];
      for (let j = 0; j < r; j++) {
        line.push(num(row, `q_${i}_${j}`, csvPath));
      }
      matrix.push(line);
    }
    return matrix;
  });
  return { meta, q };
}

export function readDensitySummary(path: string): DensitySummary {
  const rows = parseCsv(path);
  if (rows.length === 0) {
    throw new ArtifactError(path, "density summary is empty");
  }
  const hasTruth = "truth" in rows[0];
  const states = Math.max(...rows.map((row) => num(row, "state", path))) + 1;
  const grid: number[] = [];
  const mean: number[][] = [], lo: number[][] = [], hi: number[][] = [], truth: number[][] = [];
  for (let s = 0; s < states; s++) {
    mean.push([]); lo.push([]); hi.push([]); truth.push([]);
  }
  for (const row of rows) {
    const s = num(row, "state", path);
    if (s === 0) grid.push(num(row, "grid", path));
    mean[s].push(num(row, "mean", path));
    lo[s].push(num(row, "lo", path));
    hi[s].push(num(row, "hi", path));
    if (hasTruth) truth[s].push(num(row, "truth", path));
  }
  for (let s = 0; s < states; s++) {
    if (mean[s].length !== grid.length) {
      throw new ArtifactError(path, `state ${s} has ${mean[s].length} rows, grid has ${grid.length}`);
    }
  }
  return { grid, states, mean, lo, hi, truth: hasTruth ? truth : undefined };
}

export function readStandardizedDraws(path: string): StandardizedDraws {
  const rows = parseCsv(path);
  if (rows.length === 0) {
    throw new ArtifactError(path, "standardized-draw table is empty");
  }
  const z = new Map<string, number[]>();
  for (const row of rows) {
    const entry = row["entry"];
    if (!entry) throw new ArtifactError(path, "missing 'entry' field");
    if (!z.has(entry)) z.set(entry, []);
    z.get(entry)!.push(num(row, "z", path));
  }
  return { entries: [...z.keys()], z };
}

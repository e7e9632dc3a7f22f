/**
 * Artifact schemas. The renderer reads only these documented shapes and
 * fails loudly (naming the offending file) on anything else.
 */

import { z } from "zod";

export const DataMetaSchema = z.object({
  n: z.number().int().positive(),
  seed: z.number(),
  model: z.object({
    R: z.number().int().positive(),
    Q_star: z.array(z.array(z.number())),
    emissions: z.array(
      z.object({ type: z.string(), mean: z.number(), sd: z.number().positive() }),
    ),
  }),
  config_hash: z.string(),
});
export type DataMeta = z.infer<typeof DataMetaSchema>;

export const DrawStoreMetaSchema = z.object({
  R: z.number().int().positive(),
  kappa: z.number().int().positive(),
  n: z.number().int().positive(),
  seed: z.number(),
  config: z.object({ iterations: z.number(), burn_in: z.number(), thin: z.number() }),
});
export type DrawStoreMeta = z.infer<typeof DrawStoreMetaSchema>;

/** Parsed transition-matrix draws: q[d][i][j]. */
export interface DrawStore {
  meta: DrawStoreMeta;
  q: number[][][];
}

export interface DensitySummary {
  grid: number[];
  states: number;
  mean: number[][];
  lo: number[][];
  hi: number[][];
  truth?: number[][];
}

export interface StandardizedDraws {
  entries: string[];
  z: Map<string, number[]>;
}

export const FigureSpecSchema = z.object({
  kind: z.enum(["q-densities", "emission-bands", "bvm-qq"]),
  inputs: z.record(z.string(), z.any()),
  output: z.string(),
  title: z.string().optional(),
});
export type FigureSpec = z.infer<typeof FigureSpecSchema>;

export class ArtifactError extends Error {
  constructor(public readonly path: string, message: string) {
    super(`${message}: ${path}`);
    this.name = "ArtifactError";
  }
}

/**
 * The three figure kinds, built from artifact files.
 *
 * q-densities   one panel per transition-matrix entry, a kernel-density
 *               curve per bin count, a vertical truth marker when the
 *               simulation metadata is available.
 * emission-bands per-state posterior-mean curve with the pointwise band
 *               and the true density curve.
 * bvm-qq        quantiles of standardised posterior draws against normal
 *               quantiles, with the y = x reference line.
 */

import { readDataMeta, readDensitySummary, readDrawStore, readStandardizedDraws } from "./artifacts.js";
import { Element, Figure, LegendItem, PALETTE } from "./geometry.js";
import { kde, normalQuantile } from "./stats.js";
import { ArtifactError } from "./schemas.js";

export interface QDensityInputs {
  draws: { kappa: number; csv: string; meta: string }[];
  dataMeta?: string;
}

export function qDensitiesFigure(inputs: QDensityInputs, title?: string): Figure {
  if (inputs.draws.length === 0) {
    throw new ArtifactError("(q-densities)", "no draw stores supplied");
  }
  const stores = inputs.draws
    .slice()
    .sort((a, b) => a.kappa - b.kappa)
    .map((d) => ({ kappa: d.kappa, store: readDrawStore(d.csv, d.meta) }));
  const r = stores[0].store.meta.R;
  const truth = inputs.dataMeta ? readDataMeta(inputs.dataMeta).model.Q_star : undefined;
  const legend: LegendItem[] = stores.map((s, k) => ({
    label: `kappa=${s.kappa}`,
    color: PALETTE[k % PALETTE.length],
    kind: "line",
  }));
  if (truth) legend.push({ label: "truth", color: "#333333", kind: "dash" });
  const panels = [];
  for (let i = 0; i < r; i++) {
    for (let j = 0; j < r; j++) {
      const elements: Element[] = stores.map((s, k) => {
        const draws = s.store.q.map((m) => m[i][j]);
        const { grid, density } = kde(draws);
        return {
          type: "curve" as const,
          xs: grid,
          ys: density,
          color: PALETTE[k % PALETTE.length],
          cls: `curve kappa-${s.kappa}`,
        };
      });
      if (truth) {
        elements.push({ type: "vline", x: truth[i][j], color: "#333333", cls: "truth-marker" });
      }
      panels.push({ title: `Q[${i}][${j}]`, xLabel: "value", elements });
    }
  }
  const n = stores[0].store.meta.n;
  return { title: title ?? `Posterior draws for Q across bin counts (n=${n})`, panels, legend };
}

export interface EmissionBandInputs {
  summary: string;
  dataMeta?: string;
}

export function emissionBandsFigure(inputs: EmissionBandInputs, title?: string): Figure {
  const summary = readDensitySummary(inputs.summary);
  const legend: LegendItem[] = [
    { label: "posterior mean", color: PALETTE[0], kind: "line" },
    { label: "90% band", color: PALETTE[0], kind: "band" },
  ];
  if (summary.truth) legend.push({ label: "truth", color: "#333333", kind: "dash" });
  const panels = [];
  for (let s = 0; s < summary.states; s++) {
    const elements: Element[] = [
      { type: "band", xs: summary.grid, lo: summary.lo[s], hi: summary.hi[s], color: PALETTE[0], cls: `band state-${s}` },
      { type: "curve", xs: summary.grid, ys: summary.mean[s], color: PALETTE[0], cls: `mean-curve state-${s}` },
    ];
    if (summary.truth) {
      elements.push({
        type: "curve", xs: summary.grid, ys: summary.truth[s],
        color: "#333333", cls: `truth-curve state-${s}`, dash: true,
      });
    }
    panels.push({ title: `state ${s}`, xLabel: "y", elements });
  }
  return { title: title ?? "Emission densities: posterior mean and pointwise band", panels, legend };
}

export interface BvmQqInputs {
  standardized: string;
}

export function bvmQqFigure(inputs: BvmQqInputs, title?: string): Figure {
  const { entries, z } = readStandardizedDraws(inputs.standardized);
  const legend: LegendItem[] = [
    { label: "draw quantiles", color: PALETTE[0], kind: "points" },
    { label: "N(0,1) reference", color: "#333333", kind: "dash" },
  ];
  const panels = entries.map((entry) => {
    const sorted = [...z.get(entry)!].sort((a, b) => a - b);
    const theo = sorted.map((_, i) => normalQuantile((i + 0.5) / sorted.length));
    const lim = Math.max(Math.abs(theo[0]), Math.abs(theo[theo.length - 1]), Math.abs(sorted[0]), Math.abs(sorted[sorted.length - 1]));
    const elements: Element[] = [
      { type: "points", xs: theo, ys: sorted, color: PALETTE[0], cls: `qq-points entry-${entry}` },
      { type: "curve", xs: [-lim, lim], ys: [-lim, lim], color: "#333333", cls: "qq-reference", dash: true },
    ];
    return { title: entry, xLabel: "normal quantiles", elements };
  });
  return { title: title ?? "Standardised posterior draws vs normal quantiles", panels, legend };
}

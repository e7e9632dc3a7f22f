/**
 * Figure rendering entry points: validate inputs, build the figure, then
 * write SVG and PNG side by side. Inputs are fully read and validated
 * before any output file is opened, so failures leave no partial files.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { bvmQqFigure, emissionBandsFigure, qDensitiesFigure } from "./figures.js";
import { Figure, layoutFigure } from "./geometry.js";
import { renderPng } from "./png.js";
import { renderSvg } from "./svg.js";
import { ArtifactError, FigureSpec, FigureSpecSchema } from "./schemas.js";

export interface RenderedFigure {
  svgPath: string;
  pngPath: string;
}

function buildFigure(spec: FigureSpec): Figure {
  switch (spec.kind) {
    case "q-densities":
      return qDensitiesFigure(spec.inputs as never, spec.title);
    case "emission-bands":
      return emissionBandsFigure(spec.inputs as never, spec.title);
    case "bvm-qq":
      return bvmQqFigure(spec.inputs as never, spec.title);
  }
}

export function renderSpec(spec: FigureSpec): RenderedFigure {
  const parsed = FigureSpecSchema.safeParse(spec);
  if (!parsed.success) {
    throw new ArtifactError("(spec)", `figure spec invalid: ${parsed.error.issues[0]?.message}`);
  }
  const figure = buildFigure(parsed.data);
  const layout = layoutFigure(figure);
  const svg = renderSvg(layout);
  const png = renderPng(layout);
  const base = spec.output.replace(/\.(svg|png)$/i, "");
  fs.mkdirSync(path.dirname(base) || ".", { recursive: true });
  const svgPath = `${base}.svg`;
  const pngPath = `${base}.png`;
  fs.writeFileSync(svgPath, svg);
  fs.writeFileSync(pngPath, png);
  return { svgPath, pngPath };
}

export function loadSpec(specPath: string): FigureSpec {
  if (!fs.existsSync(specPath)) {
    throw new ArtifactError(specPath, "figure spec not found");
  }
  const parsed = FigureSpecSchema.safeParse(JSON.parse(fs.readFileSync(specPath, "utf8")));
  if (!parsed.success) {
    throw new ArtifactError(specPath, `figure spec invalid: ${parsed.error.issues[0]?.message}`);
  }
  return parsed.data;
}

/** Default figure specs discovered from a run directory's artifact layout. */
export function discoverSpecs(runDir: string, outDir?: string): FigureSpec[] {
  const out = outDir ?? path.join(runDir, "figures");
  const specs: FigureSpec[] = [];
  const bases = fs.existsSync(path.join(runDir, "pi1"))
    ? [{ dir: runDir, tag: "" }]
    : fs.readdirSync(runDir)
        .filter((d) => d.startsWith("n_") && fs.existsSync(path.join(runDir, d, "pi1")))
        .map((d) => ({ dir: path.join(runDir, d), tag: `_${d}` }));
  const dataMeta = path.join(runDir, "data", "meta.json");
  const maybeMeta = fs.existsSync(dataMeta) ? dataMeta : undefined;
  for (const { dir, tag } of bases) {
    const pi1 = path.join(dir, "pi1");
    if (fs.existsSync(pi1)) {
      const draws = fs.readdirSync(pi1)
        .filter((d) => d.startsWith("kappa_"))
        .map((d) => ({
          kappa: Number(d.split("_")[1]),
          csv: path.join(pi1, d, "draws.csv"),
          meta: path.join(pi1, d, "meta.json"),
        }))
        .filter((d) => fs.existsSync(d.csv));
      if (draws.length > 0) {
        specs.push({
          kind: "q-densities",
          inputs: { draws, dataMeta: maybeMeta },
          output: path.join(out, `q_densities${tag}`),
        });
      }
    }
    const pi2 = path.join(dir, "pi2");
    if (fs.existsSync(pi2)) {
      for (const d of fs.readdirSync(pi2)) {
        const summary = path.join(pi2, d, "density_summary.csv");
        if (fs.existsSync(summary)) {
          specs.push({
            kind: "emission-bands",
            inputs: { summary, dataMeta: maybeMeta },
            output: path.join(out, `emission_bands_${d}${tag}`),
          });
        }
      }
    }
    const diag = path.join(dir, "diagnostics");
    if (fs.existsSync(diag)) {
      for (const f of fs.readdirSync(diag)) {
        const m = f.match(/^bvm_standardized_kappa_(\d+)\.csv$/);
        if (m) {
          specs.push({
            kind: "bvm-qq",
            inputs: { standardized: path.join(diag, f) },
            output: path.join(out, `bvm_qq_kappa_${m[1]}${tag}`),
          });
        }
      }
    }
  }
  return specs;
}

#!/usr/bin/env node
/**
 * CLI: render figures from persisted run artifacts.
 *
 *   cuthmm-plots render --spec PATH          one figure from a JSON spec
 *   cuthmm-plots render --all --run-dir DIR  every figure the run supports
 *                        [--out-dir DIR]
 */

import { discoverSpecs, loadSpec, renderSpec } from "./render.js";
import { ArtifactError } from "./schemas.js";

function fail(message: string): never {
  console.error(message);
  process.exit(1);
}

export function main(argv: string[]): number {
  const args = [...argv];
  const command = args.shift();
  if (command !== "render") {
    fail(`unknown command ${command ?? "(none)"}; usage: render --spec PATH | render --all --run-dir DIR`);
  }
  const opts = new Map<string, string | boolean>();
  while (args.length > 0) {
    const flag = args.shift()!;
    if (!flag.startsWith("--")) fail(`unexpected argument ${flag}`);
    const name = flag.slice(2);
    if (name === "all") {
      opts.set(name, true);
    } else {
      const value = args.shift();
      if (value === undefined) fail(`flag --${name} needs a value`);
      opts.set(name, value);
    }
  }
  try {
    if (opts.has("spec")) {
      const spec = loadSpec(String(opts.get("spec")));
      const { svgPath, pngPath } = renderSpec(spec);
      console.log(`wrote ${svgPath} and ${pngPath}`);
    } else if (opts.get("all") === true) {
      const runDir = opts.get("run-dir");
      if (typeof runDir !== "string") fail("--all needs --run-dir DIR");
      const outDir = opts.has("out-dir") ? String(opts.get("out-dir")) : undefined;
      const specs = discoverSpecs(runDir, outDir);
      if (specs.length === 0) fail(`no renderable artifacts found under ${runDir}`);
      for (const spec of specs) {
        const { svgPath, pngPath } = renderSpec(spec);
        console.log(`wrote ${svgPath} and ${pngPath}`);
      }
    } else {
      fail("usage: render --spec PATH | render --all --run-dir DIR");
    }
    return 0;
  } catch (err) {
    if (err instanceof ArtifactError) fail(err.message);
    throw err;
  }
}

main(process.argv.slice(2));

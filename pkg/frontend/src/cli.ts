/**
 * render_figures <csv-dir> <out-dir> [--figure N]
 *
 * Reads figure CSVs produced by the simulator and writes one SVG (plus a
 * PNG when the rasterizer is available) per figure. Exit codes: 0 success
 * (including empty CSVs, which become empty-axes figures with a warning),
 * 1 missing input or schema mismatch, 2 usage error.
 */

import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";

import { figureTitle } from "./figures.js";
import { rasterize } from "./png.js";
import { renderHistogramFigure, renderSweepFigure } from "./render.js";
import { parseHistogramCsv, parseSweepCsv, sniffKind } from "./schema.js";

const USAGE = "usage: render_figures <csv-dir> <out-dir> [--figure N]";

const FIGURE_IDS = [1, 2, 3, 4, 5, 6, 7, 8];

export async function main(argv: string[]): Promise<number> {
  let positionals: string[];
  let figureArg: string | undefined;
  try {
    const parsed = parseArgs({
      args: argv,
      options: { figure: { type: "string" } },
      allowPositionals: true,
    });
    positionals = parsed.positionals;
    figureArg = parsed.values.figure;
  } catch (error) {
    console.error(String(error instanceof Error ? error.message : error));
    console.error(USAGE);
    return 2;
  }
  if (positionals.length !== 2) {
    console.error(USAGE);
    return 2;
  }
  const [csvDir, outDir] = positionals;

  let wanted = FIGURE_IDS;
  if (figureArg !== undefined) {
    const id = Number(figureArg);
    if (!FIGURE_IDS.includes(id)) {
      console.error(`--figure must be 1..8, got '${figureArg}'`);
      return 2;
    }
    wanted = [id];
  }

  const found = wanted.filter((id) =>
    existsSync(join(csvDir, `figure${id}.csv`)),
  );
  if (found.length === 0) {
    console.error(
      figureArg === undefined
        ? `no figure CSVs (figure1.csv .. figure8.csv) found in ${csvDir}`
        : `${join(csvDir, `figure${figureArg}.csv`)} not found`,
    );
    return 1;
  }

  mkdirSync(outDir, { recursive: true });
  let pngWarned = false;
  for (const id of found) {
    const csvPath = join(csvDir, `figure${id}.csv`);
    const textContent = readFileSync(csvPath, "utf8");
    let rendered;
    try {
      rendered =
        sniffKind(textContent) === "histogram"
          ? renderHistogramFigure(parseHistogramCsv(textContent), figureTitle(id))
          : renderSweepFigure(parseSweepCsv(textContent), figureTitle(id));
    } catch (error) {
      console.error(
        `figure${id}.csv: ${error instanceof Error ? error.message : error}`,
      );
      return 1;
    }
    for (const warning of rendered.warnings) {
      console.error(`figure${id}.csv: warning: ${warning}`);
    }
    const svgPath = join(outDir, `figure${id}.svg`);
    writeFileSync(svgPath, rendered.svg);
    console.log(`wrote ${svgPath}`);
    const png = await rasterize(rendered.svg);
    if (png !== null) {
      const pngPath = join(outDir, `figure${id}.png`);
      writeFileSync(pngPath, png);
      console.log(`wrote ${pngPath}`);
    } else if (!pngWarned) {
      console.error("warning: PNG rasterizer unavailable; wrote SVG only");
      pngWarned = true;
    }
  }
  return 0;
}

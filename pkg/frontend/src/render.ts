/**
 * SVG renderers for the two CSV kinds.
 *
 * Output is deterministic: fixed layout constants, two-decimal coordinates,
 * no timestamps, and curve order fixed by sorted cell keys. The renderer
 * draws what the CSV says and nothing else.
 */

import type { Curve, MetricFamily } from "./figures.js";
import { groupCurves } from "./figures.js";
import type { HistogramRow, SweepRow } from "./schema.js";
import type { Scale } from "./scale.js";
import { decadeBounds, linearScale, logScale } from "./scale.js";
import {
  curveStyle,
  document as svgDocument,
  num,
  pathFrom,
  tag,
  text,
} from "./svg.js";

export interface Rendered {
  svg: string;
  warnings: string[];
}

const PANEL_W = 460;
const PANEL_H = 360;
const LEGEND_W = 170;
const MARGIN_LEFT = 64;
const MARGIN_BOTTOM = 56;
const TITLE_H = 40;
const PANEL_GAP = 36;

const FAMILY_Y_LABEL: Record<MetricFamily, string> = {
  mi: "mutual information [bits/symbol]",
  ser: "symbol error rate",
};

function axisBox(
  x0: number,
  y0: number,
  xScale: Scale,
  yScale: Scale,
  xLabel: string,
  yLabel: string,
): string {
  const parts: string[] = [];
  parts.push(
    tag("rect", {
      x: x0,
      y: y0,
      width: PANEL_W,
      height: PANEL_H,
      fill: "none",
      stroke: "#303030",
      "stroke-width": "1",
    }),
  );
  const xTicks = xScale.ticks
    .map((v) => {
      const px = x0 + xScale.pos(v);
      return (
        tag("line", {
          x1: px,
          y1: y0 + PANEL_H,
          x2: px,
          y2: y0 + PANEL_H + 5,
          stroke: "#303030",
        }) +
        text(px, y0 + PANEL_H + 20, xScale.tickLabel(v), {
          "text-anchor": "middle",
          "font-size": "12",
        })
      );
    })
    .join("");
  parts.push(tag("g", { class: "axis-x", "data-scale": xScale.kind }, xTicks));
  const yTicks = yScale.ticks
    .map((v) => {
      const py = y0 + PANEL_H - yScale.pos(v);
      return (
        tag("line", {
          x1: x0 - 5,
          y1: py,
          x2: x0,
          y2: py,
          stroke: "#303030",
        }) +
        tag("line", {
          x1: x0,
          y1: py,
          x2: x0 + PANEL_W,
          y2: py,
          stroke: "#e0e0e0",
        }) +
        text(x0 - 8, py + 4, yScale.tickLabel(v), {
          "text-anchor": "end",
          "font-size": "12",
        })
      );
    })
    .join("");
  parts.push(tag("g", { class: "axis-y", "data-scale": yScale.kind }, yTicks));
  parts.push(
    text(x0 + PANEL_W / 2, y0 + PANEL_H + 40, xLabel, {
      "text-anchor": "middle",
      "font-size": "13",
    }),
  );
  parts.push(
    tag(
      "g",
      {
        transform: `translate(${num(x0 - 44)} ${num(y0 + PANEL_H / 2)}) rotate(-90)`,
      },
      text(0, 0, yLabel, { "text-anchor": "middle", "font-size": "13" }),
    ),
  );
  return parts.join("\n");
}

function legend(x0: number, y0: number, curves: Curve[]): string {
  const items = curves
    .map((curve, i) => {
      const y = y0 + 16 + i * 20;
      return tag(
        "g",
        { class: "legend-item" },
        tag("line", {
          x1: x0,
          y1: y,
          x2: x0 + 26,
          y2: y,
          ...curveStyle(i),
        }) + text(x0 + 32, y + 4, curve.label, { "font-size": "12" }),
      );
    })
    .join("\n");
  return tag("g", { class: "legend" }, items);
}

function emptyFigure(title: string, note: string): string {
  const xScale = linearScale([-30, 10], [0, PANEL_W]);
  const yScale = linearScale([0, 1], [0, PANEL_H]);
  const body = [
    text(MARGIN_LEFT, 24, title, { "font-size": "16", "font-weight": "bold" }),
    tag(
      "g",
      { class: "panel", "data-empty": "true" },
      axisBox(MARGIN_LEFT, TITLE_H, xScale, yScale, "SNR [dB]", "") +
        text(MARGIN_LEFT + PANEL_W / 2, TITLE_H + PANEL_H / 2, note, {
          "text-anchor": "middle",
          "font-size": "14",
          fill: "#808080",
          class: "empty-note",
        }),
    ),
  ].join("\n");
  return svgDocument(
    MARGIN_LEFT + PANEL_W + LEGEND_W,
    TITLE_H + PANEL_H + MARGIN_BOTTOM,
    body,
  );
}

/** Sweep CSV to SVG: one panel per metric family present in the rows. */
export function renderSweepFigure(
  rows: SweepRow[],
  title: string,
): Rendered {
  const { curves, warnings } = groupCurves(rows);
  if (curves.length === 0) {
    warnings.push("no plottable rows; drew empty axes");
    return { svg: emptyFigure(title, "no data"), warnings };
  }
  const families = (["mi", "ser"] as const).filter((f) =>
    curves.some((c) => c.family === f),
  );
  const panels: string[] = [];
  families.forEach((family, fi) => {
    const panelCurves = curves.filter((c) => c.family === family);
    const x0 = MARGIN_LEFT + fi * (PANEL_W + LEGEND_W + PANEL_GAP + MARGIN_LEFT);
    const y0 = TITLE_H;
    const snrs = panelCurves.flatMap((c) => c.points.map((p) => p.snrDb));
    const xScale = linearScale(
      [Math.min(...snrs), Math.max(...snrs)],
      [0, PANEL_W],
    );

    let yScale: Scale;
    let plottable = (p: { value: number }) => true;
    if (family === "mi") {
      yScale = linearScale([0, 2.1], [0, PANEL_H]);
    } else {
      const values = panelCurves.flatMap((c) => c.points.map((p) => p.value));
      const bounds = decadeBounds(values);
      if (bounds === null) {
        warnings.push(
          "all symbol error rates are nonpositive; drew empty log axes",
        );
        panels.push(
          tag(
            "g",
            { class: "panel", "data-family": family, "data-empty": "true" },
            text(x0 + PANEL_W / 2, y0 + PANEL_H / 2, "no positive values", {
              "text-anchor": "middle",
              class: "empty-note",
            }),
          ),
        );
        return;
      }
      yScale = logScale(bounds, [0, PANEL_H]);
      plottable = (p) => p.value > 0;
      const dropped = values.filter((v) => !(v > 0)).length;
      if (dropped > 0) {
        warnings.push(
          `dropped ${dropped} nonpositive error-rate point(s) from the log axis`,
        );
      }
    }

    const paths = panelCurves
      .map((curve, i) => {
        const pts = curve.points
          .filter(plottable)
          .map(
            (p) =>
              [xScale.pos(p.snrDb) + x0, y0 + PANEL_H - yScale.pos(p.value)] as [
                number,
                number,
              ],
          );
        if (pts.length === 0) return "";
        return tag("path", {
          class: "curve",
          "data-key": curve.key,
          d: pathFrom(pts),
          ...curveStyle(i),
        });
      })
      .filter((p) => p !== "")
      .join("\n");

    panels.push(
      tag(
        "g",
        {
          class: "panel",
          "data-family": family,
          "data-curves": String(panelCurves.length),
        },
        axisBox(x0, y0, xScale, yScale, "SNR [dB]", FAMILY_Y_LABEL[family]) +
          "\n" +
          paths +
          "\n" +
          legend(x0 + PANEL_W + 18, y0, panelCurves),
      ),
    );
  });

  const width =
    MARGIN_LEFT +
    families.length * (PANEL_W + LEGEND_W) +
    (families.length - 1) * (PANEL_GAP + MARGIN_LEFT);
  const body = [
    text(MARGIN_LEFT, 24, title, { "font-size": "16", "font-weight": "bold" }),
    ...panels,
  ].join("\n");
  return {
    svg: svgDocument(width, TITLE_H + PANEL_H + MARGIN_BOTTOM, body),
    warnings,
  };
}

const SUB_W = 300;
const SUB_H = 170;
const SUB_GAP_X = 84;
const SUB_GAP_Y = 64;

/** Histogram CSV to SVG: a grid of panels, bars plus the model curve. */
export function renderHistogramFigure(
  rows: HistogramRow[],
  title: string,
): Rendered {
  const warnings: string[] = [];
  if (rows.length === 0) {
    warnings.push("no histogram rows; drew empty axes");
    return { svg: emptyFigure(title, "no data"), warnings };
  }
  const panelIds = [...new Set(rows.map((r) => r.panel))].sort(
    (a, b) => a - b,
  );
  const axes = ["re", "im"].filter((axis) =>
    rows.some((r) => r.axis === axis),
  );
  const parts: string[] = [
    text(MARGIN_LEFT, 24, title, { "font-size": "16", "font-weight": "bold" }),
  ];
  panelIds.forEach((panelId, pi) => {
    axes.forEach((axis, ai) => {
      const subset = rows
        .filter((r) => r.panel === panelId && r.axis === axis)
        .sort((a, b) => a.binCenter - b.binCenter);
      if (subset.length === 0) return;
      const x0 = MARGIN_LEFT + ai * (SUB_W + SUB_GAP_X);
      const y0 = TITLE_H + 20 + pi * (SUB_H + SUB_GAP_Y);
      const centers = subset.map((r) => r.binCenter);
      const binWidth =
        centers.length > 1 ? centers[1] - centers[0] : 1.0;
      const xScale = linearScale(
        [centers[0] - binWidth / 2, centers[centers.length - 1] + binWidth / 2],
        [0, SUB_W],
      );
      const peak = Math.max(
        ...subset.map((r) => Math.max(r.empiricalDensity, r.analyticDensity)),
      );
      const yScale = linearScale([0, peak * 1.05 || 1], [0, SUB_H]);

      const bars = subset
        .map((r) => {
          const left = x0 + xScale.pos(r.binCenter - binWidth / 2);
          const right = x0 + xScale.pos(r.binCenter + binWidth / 2);
          const top = y0 + SUB_H - yScale.pos(r.empiricalDensity);
          return tag("rect", {
            class: "bar",
            x: left,
            y: top,
            width: right - left,
            height: y0 + SUB_H - top,
            fill: "#aec7e8",
          });
        })
        .join("\n");
      const model = tag("path", {
        class: "curve",
        d: pathFrom(
          subset.map((r) => [
            x0 + xScale.pos(r.binCenter),
            y0 + SUB_H - yScale.pos(r.analyticDensity),
          ]),
        ),
        stroke: "#d62728",
        fill: "none",
        "stroke-width": "1.5",
      });
      const frame = tag("rect", {
        x: x0,
        y: y0,
        width: SUB_W,
        height: SUB_H,
        fill: "none",
        stroke: "#303030",
      });
      const xTicks = xScale.ticks
        .map((v) => {
          const px = x0 + xScale.pos(v);
          return (
            tag("line", {
              x1: px,
              y1: y0 + SUB_H,
              x2: px,
              y2: y0 + SUB_H + 4,
              stroke: "#303030",
            }) +
            text(px, y0 + SUB_H + 16, xScale.tickLabel(v), {
              "text-anchor": "middle",
              "font-size": "10",
            })
          );
        })
        .join("");
      const caption = text(
        x0 + SUB_W / 2,
        y0 - 6,
        `channel ${panelId}, ${axis === "re" ? "Re" : "Im"}`,
        { "text-anchor": "middle", "font-size": "12" },
      );
      parts.push(
        tag(
          "g",
          {
            class: "panel",
            "data-panel": String(panelId),
            "data-axis": axis,
          },
          [bars, model, frame, tag("g", { class: "axis-x" }, xTicks), caption].join(
            "\n",
          ),
        ),
      );
    });
  });
  const width = MARGIN_LEFT + axes.length * (SUB_W + SUB_GAP_X);
  const height = TITLE_H + 20 + panelIds.length * (SUB_H + SUB_GAP_Y);
  return { svg: svgDocument(width, height, parts.join("\n")), warnings };
}

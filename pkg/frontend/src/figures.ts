/** Curve grouping: from flat sweep rows to labeled, ordered series. */

import type { SweepRow } from "./schema.js";

export type MetricFamily = "mi" | "ser";

export interface CurvePoint {
  snrDb: number;
  value: number;
  stdError: number | null;
}

export interface Curve {
  key: string;
  label: string;
  metric: string;
  family: MetricFamily;
  points: CurvePoint[];
}

export function metricFamily(metric: string): MetricFamily {
  if (metric.startsWith("mi_")) return "mi";
  if (metric.startsWith("ser_")) return "ser";
  throw new Error(`metric '${metric}' is neither mi_* nor ser_*`);
}

const METRIC_LABELS: Record<string, string> = {
  mi_hard_mc: "hard, MC",
  mi_soft_mc: "soft, MC",
  mi_hard_analytic: "hard, analytic",
  mi_soft_analytic: "soft, analytic",
  ser_mc: "MC",
  ser_analytic: "analytic",
};

interface CellId {
  metric: string;
  filter: string;
  csiMode: string;
  quantizerMode: string;
  pilotLen: number | null;
}

function cellKey(id: CellId): string {
  return [
    id.metric,
    id.filter,
    id.csiMode,
    id.quantizerMode,
    id.pilotLen === null ? "" : String(id.pilotLen),
  ].join("|");
}

/**
 * A field appears in a curve's label only when it distinguishes curves in
 * this file, so figure legends stay short without per-figure tables.
 */
function buildLabel(id: CellId, ids: CellId[]): string {
  const distinct = <T>(get: (c: CellId) => T) =>
    new Set(ids.map(get)).size > 1;
  const parts: string[] = [];
  if (distinct((c) => c.filter)) parts.push(id.filter.replace("_", " "));
  if (distinct((c) => `${c.csiMode}:${c.pilotLen}`)) {
    parts.push(id.csiMode === "full" ? "full CSI" : `N=${id.pilotLen}`);
  }
  if (distinct((c) => c.quantizerMode)) {
    parts.push(id.quantizerMode === "one_bit" ? "1-bit" : "unquantized");
  }
  if (distinct((c) => c.metric)) {
    parts.push(METRIC_LABELS[id.metric] ?? id.metric);
  }
  if (parts.length === 0) parts.push(METRIC_LABELS[id.metric] ?? id.metric);
  return parts.join(", ");
}

export interface GroupedCurves {
  curves: Curve[];
  warnings: string[];
}

export function groupCurves(rows: SweepRow[]): GroupedCurves {
  const warnings: string[] = [];
  const failed = rows.filter((r) => r.error !== "");
  if (failed.length > 0) {
    warnings.push(
      `skipped ${failed.length} failed cell row(s); first error: ` +
        failed[0].error,
    );
  }
  const byKey = new Map<string, { id: CellId; points: CurvePoint[] }>();
  for (const row of rows) {
    if (row.error !== "" || row.value === null) continue;
    const id: CellId = {
      metric: row.metric,
      filter: row.filter,
      csiMode: row.csiMode,
      quantizerMode: row.quantizerMode,
      pilotLen: row.pilotLen,
    };
    const key = cellKey(id);
    if (!byKey.has(key)) byKey.set(key, { id, points: [] });
    byKey.get(key)!.points.push({
      snrDb: row.snrDb,
      value: row.value,
      stdError: row.stdError,
    });
  }
  const keys = [...byKey.keys()].sort();
  const ids = keys.map((k) => byKey.get(k)!.id);
  const curves = keys.map((key, i) => {
    const { id, points } = byKey.get(key)!;
    points.sort((a, b) => a.snrDb - b.snrDb);
    return {
      key,
      label: buildLabel(id, ids),
      metric: id.metric,
      family: metricFamily(id.metric),
      points,
    };
  });
  return { curves, warnings };
}

export const FIGURE_TITLES: Record<number, string> = {
  1: "Soft-output marginals: empirical vs Gaussian model",
  2: "Mutual information vs SNR: receive filters and pilot budgets",
  3: "Mutual information vs SNR: pilot length study",
  4: "Symbol error rate vs SNR: pilot length study",
  5: "Mutual information vs SNR: 1-bit vs unquantized front end",
  6: "Symbol error rate vs SNR: 1-bit vs unquantized front end",
  7: "Mutual information vs SNR: Monte Carlo vs closed form",
  8: "Symbol error rate vs SNR: Monte Carlo vs closed form",
};

export function figureTitle(id: number): string {
  return FIGURE_TITLES[id] ?? `Figure ${id}`;
}

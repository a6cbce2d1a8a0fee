/**
 * CSV contract with the simulator.
 *
 * Two file kinds exist: sweep files (one metric value per SNR point and
 * cell) and histogram files (binned densities for the soft-output panels).
 * The renderer never recomputes metrics; it only reads these columns.
 */

import Papa from "papaparse";

export const SWEEP_COLUMNS = [
  "snr_db",
  "filter",
  "csi_mode",
  "quantizer_mode",
  "pilot_len_N",
  "metric",
  "value",
  "std_error",
  "channel_trials",
  "inner_trials",
  "master_seed",
  "M",
  "K",
  "error",
] as const;

export const HISTOGRAM_COLUMNS = [
  "panel",
  "axis",
  "bin_center",
  "empirical_density",
  "analytic_density",
] as const;

export interface SweepRow {
  snrDb: number;
  filter: string;
  csiMode: string;
  quantizerMode: string;
  pilotLen: number | null;
  metric: string;
  value: number | null;
  stdError: number | null;
  /** empty string when the cell succeeded */
  error: string;
}

export interface HistogramRow {
  panel: number;
  axis: string;
  binCenter: number;
  empiricalDensity: number;
  analyticDensity: number;
}

export type CsvKind = "sweep" | "histogram";

function records(text: string): string[][] {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`CSV parse error at row ${first.row}: ${first.message}`);
  }
  return parsed.data;
}

function columnIndex(
  header: string[],
  required: readonly string[],
): Map<string, number> {
  const index = new Map<string, number>();
  header.forEach((name, i) => index.set(name.trim(), i));
  for (const name of required) {
    if (!index.has(name)) {
      throw new Error(`CSV is missing required column '${name}'`);
    }
  }
  return index;
}

/** Decide which schema a file follows by its header line. */
export function sniffKind(text: string): CsvKind {
  const firstLine = text.split(/\r?\n/, 1)[0] ?? "";
  return firstLine.split(",").map((c) => c.trim()).includes("panel")
    ? "histogram"
    : "sweep";
}

function parseNumber(raw: string, column: string): number {
  const value = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(value)) {
    throw new Error(`column '${column}' holds non-numeric value '${raw}'`);
  }
  return value;
}

function parseOptionalNumber(raw: string, column: string): number | null {
  return raw.trim() === "" ? null : parseNumber(raw, column);
}

/** Parse a sweep CSV; an empty file yields zero rows. */
export function parseSweepCsv(text: string): SweepRow[] {
  if (text.trim() === "") return [];
  const rows = records(text);
  const index = columnIndex(rows[0], SWEEP_COLUMNS);
  const at = (record: string[], name: string) =>
    record[index.get(name)!] ?? "";
  return rows.slice(1).map((record) => {
    const error = at(record, "error");
    return {
      snrDb: parseNumber(at(record, "snr_db"), "snr_db"),
      filter: at(record, "filter"),
      csiMode: at(record, "csi_mode"),
      quantizerMode: at(record, "quantizer_mode"),
      pilotLen: parseOptionalNumber(at(record, "pilot_len_N"), "pilot_len_N"),
      metric: at(record, "metric"),
      // failed cells leave value/std_error blank and explain themselves
      // in the error column
      value:
        error === ""
          ? parseNumber(at(record, "value"), "value")
          : parseOptionalNumber(at(record, "value"), "value"),
      stdError: parseOptionalNumber(at(record, "std_error"), "std_error"),
      error,
    };
  });
}

/** Parse a histogram CSV; an empty file yields zero rows. */
export function parseHistogramCsv(text: string): HistogramRow[] {
  if (text.trim() === "") return [];
  const rows = records(text);
  const index = columnIndex(rows[0], HISTOGRAM_COLUMNS);
  const at = (record: string[], name: string) =>
    record[index.get(name)!] ?? "";
  return rows.slice(1).map((record) => ({
    panel: parseNumber(at(record, "panel"), "panel"),
    axis: at(record, "axis"),
    binCenter: parseNumber(at(record, "bin_center"), "bin_center"),
    empiricalDensity: parseNumber(
      at(record, "empirical_density"),
      "empirical_density",
    ),
    analyticDensity: parseNumber(
      at(record, "analytic_density"),
      "analytic_density",
    ),
  }));
}

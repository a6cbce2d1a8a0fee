/** Axis scales: value-to-pixel maps plus tick positions and labels. */

export type ScaleKind = "linear" | "log";

export interface Scale {
  kind: ScaleKind;
  domain: [number, number];
  range: [number, number];
  pos(value: number): number;
  ticks: number[];
  tickLabel(value: number): string;
}

function trimmedDecimal(value: number): string {
  // enough digits for SNR grids and densities, no trailing zeros
  const text = value.toPrecision(6);
  return text.includes(".")
    ? text.replace(/\.?0+$/, "").replace(/\.?0+e/, "e")
    : text;
}

/** Classic 1/2/5 tick stepping covering [lo, hi]. */
export function linearTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(1, target);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    step = mult * power;
    if (step >= rawStep) break;
  }
  const ticks: number[] = [];
  for (
    let v = Math.ceil(lo / step) * step;
    v <= hi + step * 1e-9;
    v += step
  ) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [lo, hi] = domain;
  const span = hi - lo || 1;
  return {
    kind: "linear",
    domain,
    range,
    pos: (value) => range[0] + ((value - lo) / span) * (range[1] - range[0]),
    ticks: linearTicks(lo, hi),
    tickLabel: trimmedDecimal,
  };
}

/** Log10 scale with decade ticks. Domain must be positive. */
export function logScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [lo, hi] = domain;
  if (!(lo > 0) || !(hi > 0)) {
    throw new Error(`log scale needs a positive domain, got [${lo}, ${hi}]`);
  }
  const logLo = Math.log10(lo);
  const logHi = Math.log10(hi);
  const span = logHi - logLo || 1;
  const ticks: number[] = [];
  for (let e = Math.ceil(logLo - 1e-9); e <= logHi + 1e-9; e += 1) {
    ticks.push(Math.pow(10, e));
  }
  return {
    kind: "log",
    domain,
    range,
    pos: (value) =>
      range[0] + ((Math.log10(value) - logLo) / span) * (range[1] - range[0]),
    ticks,
    tickLabel: (value) => {
      const exponent = Math.round(Math.log10(value));
      return exponent === 0 ? "1" : `1e${exponent}`;
    },
  };
}

/** Decade bounds enclosing all positive values; null when none exist. */
export function decadeBounds(values: number[]): [number, number] | null {
  const positive = values.filter((v) => v > 0);
  if (positive.length === 0) return null;
  const lo = Math.min(...positive);
  const hi = Math.max(...positive);
  const floor = Math.pow(10, Math.floor(Math.log10(lo)));
  let ceil = Math.pow(10, Math.ceil(Math.log10(hi)));
  if (ceil === floor) ceil = floor * 10;
  return [floor, ceil];
}

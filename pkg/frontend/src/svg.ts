/** Minimal SVG string assembly with deterministic number formatting. */

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Two-decimal coordinates keep output bytes stable across platforms. */
export function num(value: number): string {
  const text = value.toFixed(2);
  return text === "-0.00" ? "0.00" : text;
}

export type Attrs = Record<string, string | number>;

function attrText(attrs: Attrs): string {
  return Object.entries(attrs)
    .map(([key, value]) =>
      ` ${key}="${typeof value === "number" ? num(value) : esc(value)}"`,
    )
    .join("");
}

export function tag(name: string, attrs: Attrs, body = ""): string {
  return body === ""
    ? `<${name}${attrText(attrs)}/>`
    : `<${name}${attrText(attrs)}>${body}</${name}>`;
}

export function text(x: number, y: number, body: string, attrs: Attrs = {}): string {
  return tag("text", { x: num(x), y: num(y), ...attrs }, esc(body));
}

export function pathFrom(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${num(x)} ${num(y)}`)
    .join(" ");
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export const DASHES = ["", "7 3", "2 2", "7 3 2 3"];

export function curveStyle(index: number): Attrs {
  const attrs: Attrs = {
    stroke: PALETTE[index % PALETTE.length],
    fill: "none",
    "stroke-width": "1.5",
  };
  const dash = DASHES[Math.floor(index / PALETTE.length) % DASHES.length];
  if (dash !== "") attrs["stroke-dasharray"] = dash;
  return attrs;
}

export function document(
  width: number,
  height: number,
  body: string,
): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="#ffffff"/>\n` +
    body +
    "\n</svg>\n"
  );
}

/**
 * Minimal deterministic SVG scene builder: fixed decimal formatting and
 * explicit element ordering, so identical inputs give identical bytes.
 */

export type Scale = (v: number) => number;

export function linearScale(
  [d0, d1]: [number, number],
  [r0, r1]: [number, number],
): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(
  [d0, d1]: [number, number],
  [r0, r1]: [number, number],
): Scale {
  if (d0 <= 0 || d1 <= 0) {
    throw new Error("log scale needs positive domain bounds");
  }
  const l0 = Math.log10(d0);
  const span = Math.log10(d1) - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

const fmt = (v: number): string => v.toFixed(2);

export const PALETTE = [
  "#1f5fa8",
  "#c44e52",
  "#55a868",
  "#8172b2",
  "#ccb974",
  "#64b5cd",
];

/** Tick positions: round decades for log axes, even steps otherwise. */
export function linearTicks(lo: number, hi: number, n = 6): number[] {
  const raw = (hi - lo) / Math.max(n - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw || 1)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => (hi - lo) / s <= n - 1) ?? mag;
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    out.push(Number(t.toPrecision(12)));
  }
  return out;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e += 1) {
    out.push(Math.pow(10, e));
  }
  return out;
}

export class Scene {
  private parts: string[] = [];
  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  rect(x: number, y: number, w: number, h: number, attrs = ""): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ${attrs}/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs = ""): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${attrs}/>`,
    );
  }

  polyline(pts: [number, number][], attrs = ""): void {
    const s = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polyline fill="none" points="${s}" ${attrs}/>`);
  }

  text(x: number, y: number, content: string, attrs = ""): void {
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${escapeXml(content)}</text>`);
  }

  toString(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}" ` +
      `font-family="Helvetica, Arial, sans-serif" font-size="11">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function escapeXml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;");
}

export interface Panel {
  x: number;
  y: number;
  w: number;
  h: number;
  sx: Scale;
  sy: Scale;
}

/** Axes frame with tick marks and labels into an existing scene. */
export function drawFrame(
  scene: Scene,
  panel: Panel,
  xTicks: number[],
  yTicks: number[],
  xLabel: string,
  yLabel: string,
  tickFormat: (v: number) => string = (v) => String(v),
): void {
  const { x, y, w, h, sx, sy } = panel;
  scene.rect(x, y, w, h, 'fill="none" stroke="#333" stroke-width="1"');
  for (const t of xTicks) {
    const px = sx(t);
    scene.line(px, y + h, px, y + h + 4, 'stroke="#333"');
    scene.line(px, y, px, y + h, 'stroke="#ddd" stroke-width="0.5"');
    scene.text(px, y + h + 16, tickFormat(t), 'text-anchor="middle"');
  }
  for (const t of yTicks) {
    const py = sy(t);
    scene.line(x - 4, py, x, py, 'stroke="#333"');
    scene.line(x, py, x + w, py, 'stroke="#ddd" stroke-width="0.5"');
    scene.text(x - 7, py + 3, tickFormat(t), 'text-anchor="end"');
  }
  scene.text(x + w / 2, y + h + 32, xLabel, 'text-anchor="middle"');
  scene.text(x - 42, y + h / 2, yLabel, `text-anchor="middle" transform="rotate(-90 ${(x - 42).toFixed(2)} ${(y + h / 2).toFixed(2)})"`);
}

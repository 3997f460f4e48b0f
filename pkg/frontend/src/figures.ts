/**
 * Figure kinds over the simulation CLI's CSV artifacts.
 *
 * Every renderer is a pure function of its input tables: same CSVs in,
 * byte-identical SVG out.
 */

import { column, columnsByPrefix, readTable, stringColumn, Table } from "./csv.js";
import {
  decadeTicks,
  drawFrame,
  linearScale,
  linearTicks,
  logScale,
  PALETTE,
  Panel,
  Scene,
} from "./svg.js";

export type FigureKind = "frf-error" | "wavelength" | "solver-bars" | "phase";

export interface FigureSpec {
  kind: FigureKind;
  /** Input CSV paths; meaning depends on the kind (see renderers). */
  inputs: string[];
  output: string;
  /** Frequency-window boundaries marked with dashed lines (frf-error). */
  windows?: number[];
  title?: string;
}

const WIDTH = 640;

function need(spec: FigureSpec, count: number, what: string): Table[] {
  if (spec.inputs.length < count) {
    throw new Error(`figure kind ${spec.kind} needs ${what}`);
  }
  return spec.inputs.map(readTable);
}

function panel(
  x: number,
  y: number,
  w: number,
  h: number,
  sx: Panel["sx"],
  sy: Panel["sy"],
): Panel {
  return { x, y, w, h, sx, sy };
}

/** Dashed vertical boundary markers, tagged with their frequency. */
function windowDashes(scene: Scene, p: Panel, windows: number[]): void {
  for (const f of windows) {
    const px = p.sx(f);
    if (px < p.x - 1e-6 || px > p.x + p.w + 1e-6) continue;
    scene.line(
      px,
      p.y,
      px,
      p.y + p.h,
      `stroke="#555" stroke-width="1" stroke-dasharray="5,4" class="window-boundary" data-f="${f}"`,
    );
  }
}

/** FRF magnitude over frequency with the relative error panel below. */
export function renderFrfError(spec: FigureSpec): string {
  const [frf, err] = need(spec, 2, "an FRF CSV and an error CSV");
  const f = column(frf, "f_hz");
  const spl = column(frf, "spl_db");
  const fe = column(err, "f_hz");
  const re = column(err, "rel_error");

  const scene = new Scene(WIDTH, 480);
  const fLo = Math.min(...f, ...fe);
  const fHi = Math.max(...f, ...fe);
  const sx = linearScale([fLo, fHi], [70, WIDTH - 20]);

  const sLo = Math.min(...spl);
  const sHi = Math.max(...spl);
  const pad = 0.05 * (sHi - sLo || 1);
  const syTop = linearScale([sLo - pad, sHi + pad], [230, 30]);
  const top = panel(70, 30, WIDTH - 90, 200, sx, syTop);
  drawFrame(
    scene,
    top,
    linearTicks(fLo, fHi),
    linearTicks(sLo - pad, sHi + pad, 5),
    "",
    "SPL [dB]",
    (v) => v.toFixed(0),
  );
  scene.polyline(
    f.map((v, i) => [sx(v), syTop(spl[i])] as [number, number]),
    `stroke="${PALETTE[0]}" stroke-width="1.5"`,
  );

  const ePos = re.map((v) => Math.max(v, 1e-16));
  const eLo = Math.pow(10, Math.floor(Math.log10(Math.min(...ePos))));
  const eHi = Math.pow(10, Math.ceil(Math.log10(Math.max(...ePos))));
  const syBot = logScale([eLo, eHi], [440, 290]);
  const bot = panel(70, 290, WIDTH - 90, 150, sx, syBot);
  drawFrame(
    scene,
    bot,
    linearTicks(fLo, fHi),
    decadeTicks(eLo, eHi),
    "frequency [Hz]",
    "relative error",
    (v) => (v >= 1 || v <= 1e-1 ? v.toExponential(0) : String(v)),
  );
  scene.polyline(
    fe.map((v, i) => [sx(v), syBot(ePos[i])] as [number, number]),
    `stroke="${PALETTE[1]}" stroke-width="1.5"`,
  );

  for (const p of [top, bot]) windowDashes(scene, p, spec.windows ?? []);
  if (spec.title) scene.text(WIDTH / 2, 18, spec.title, 'text-anchor="middle" font-size="13"');
  return scene.toString();
}

/** Smallest wavelength per domain over frequency, log-log. */
export function renderWavelength(spec: FigureSpec): string {
  const [table] = need(spec, 1, "a wavelengths CSV");
  const f = column(table, "f_hz");
  const curves = columnsByPrefix(table, "lambda_");

  const scene = new Scene(WIDTH, 420);
  const fLo = Math.min(...f);
  const fHi = Math.max(...f);
  const all = curves.flatMap((c) => c.values);
  const lLo = Math.pow(10, Math.floor(Math.log10(Math.min(...all))));
  const lHi = Math.pow(10, Math.ceil(Math.log10(Math.max(...all))));
  const sx = logScale([fLo, fHi], [70, WIDTH - 20]);
  const sy = logScale([lLo, lHi], [360, 30]);
  const p = panel(70, 30, WIDTH - 90, 330, sx, sy);
  drawFrame(
    scene,
    p,
    decadeTicks(fLo, fHi),
    decadeTicks(lLo, lHi),
    "frequency [Hz]",
    "wavelength [m]",
    (v) => (v >= 1 ? v.toFixed(0) : v.toExponential(0)),
  );
  curves.forEach((c, k) => {
    scene.polyline(
      f.map((v, i) => [sx(v), sy(c.values[i])] as [number, number]),
      `stroke="${PALETTE[k % PALETTE.length]}" stroke-width="1.5" data-curve="${c.name}"`,
    );
    scene.text(
      WIDTH - 26,
      44 + 16 * k,
      c.name.replace("lambda_", "").replace(/_m$/, ""),
      `text-anchor="end" fill="${PALETTE[k % PALETTE.length]}"`,
    );
  });
  if (spec.title) scene.text(WIDTH / 2, 18, spec.title, 'text-anchor="middle" font-size="13"');
  return scene.toString();
}

/** Solver comparison bars: wall time and factor storage per method. */
export function renderSolverBars(spec: FigureSpec): string {
  const [report] = need(spec, 1, "a report CSV");
  const names = stringColumn(report, "method");
  const methods = names.map((_, i) => i);
  const times = column(report, "total_time_s");
  const memory = column(report, "memory_bytes").map((b) => b / 1e6);

  const scene = new Scene(WIDTH, 380);
  const groups: [string, number[], string][] = [
    ["wall time [s]", times, PALETTE[0]],
    ["factor memory [MB]", memory, PALETTE[2]],
  ];
  const px0 = 70;
  const pw = (WIDTH - 110) / 2;
  groups.forEach(([label, values, color], g) => {
    const x0 = px0 + g * (pw + 20);
    const vHi = Math.max(...values) * 1.1 || 1;
    const sy = linearScale([0, vHi], [320, 40]);
    const p = panel(x0, 40, pw, 280, linearScale([0, 1], [x0, x0 + pw]), sy);
    drawFrame(scene, p, [], linearTicks(0, vHi, 5), label, "", (v) =>
      v >= 100 ? v.toFixed(0) : v.toPrecision(3),
    );
    const bw = pw / (methods.length * 1.6);
    values.forEach((v, i) => {
      const bx = x0 + ((i + 0.5) * pw) / methods.length - bw / 2;
      scene.rect(bx, sy(v), bw, 320 - sy(v), `fill="${color}" data-method="${names[i]}"`);
      scene.text(bx + bw / 2, 336, names[i], 'text-anchor="middle"');
    });
  });
  if (spec.title) scene.text(WIDTH / 2, 22, spec.title, 'text-anchor="middle" font-size="13"');
  return scene.toString();
}

/** Incident plane-wave phase along the loaded edge, one curve per CSV. */
export function renderPhase(spec: FigureSpec): string {
  const tables = need(spec, 1, "one edge-phase CSV per frequency");
  const scene = new Scene(WIDTH, 380);
  const sAll = tables.flatMap((t) => column(t, "s_m"));
  const sLo = Math.min(...sAll);
  const sHi = Math.max(...sAll);
  const sx = linearScale([sLo, sHi], [70, WIDTH - 20]);
  const sy = linearScale([-Math.PI, Math.PI], [320, 40]);
  const p = panel(70, 40, WIDTH - 90, 280, sx, sy);
  drawFrame(
    scene,
    p,
    linearTicks(sLo, sHi, 5),
    [-Math.PI, -Math.PI / 2, 0, Math.PI / 2, Math.PI],
    "edge coordinate [m]",
    "phase [rad]",
    (v) => v.toFixed(2),
  );
  tables.forEach((t, k) => {
    const s = column(t, "s_m");
    const phase = column(t, "phase_rad");
    const fHz = column(t, "f_hz")[0];
    scene.polyline(
      s.map((v, i) => [sx(v), sy(phase[i])] as [number, number]),
      `stroke="${PALETTE[k % PALETTE.length]}" stroke-width="1.5" data-f="${fHz}"`,
    );
    scene.text(
      WIDTH - 26,
      54 + 16 * k,
      `${fHz} Hz`,
      `text-anchor="end" fill="${PALETTE[k % PALETTE.length]}"`,
    );
  });
  if (spec.title) scene.text(WIDTH / 2, 22, spec.title, 'text-anchor="middle" font-size="13"');
  return scene.toString();
}

const RENDERERS: Record<FigureKind, (spec: FigureSpec) => string> = {
  "frf-error": renderFrfError,
  wavelength: renderWavelength,
  "solver-bars": renderSolverBars,
  phase: renderPhase,
};

/** Render a figure spec to its SVG string. */
export function render(spec: FigureSpec): string {
  const renderer = RENDERERS[spec.kind];
  if (!renderer) {
    throw new Error(`unknown figure kind "${spec.kind}"`);
  }
  return renderer(spec);
}

/**
 * Figure model and layout: figures are grids of panels holding data-space
 * elements; the SVG and PNG backends consume the same projected geometry.
 */

export type Element =
  | { type: "curve"; xs: number[]; ys: number[]; color: string; cls: string; width?: number; dash?: boolean }
  | { type: "band"; xs: number[]; lo: number[]; hi: number[]; color: string; cls: string }
  | { type: "vline"; x: number; color: string; cls: string; dash?: boolean }
  | { type: "points"; xs: number[]; ys: number[]; color: string; cls: string };

export interface Panel {
  title: string;
  xLabel?: string;
  yLabel?: string;
  elements: Element[];
  xRange?: [number, number];
  yRange?: [number, number];
}

export interface LegendItem {
  label: string;
  color: string;
  kind: "line" | "band" | "dash" | "points";
}

export interface Figure {
  title: string;
  panels: Panel[];
  legend: LegendItem[];
  width?: number;
  height?: number;
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export interface Tick {
  value: number;
  label: string;
}

/** Round-valued axis ticks covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, target = 5): Tick[] {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const span = hi - lo;
  const step0 = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (step0 <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: Tick[] = [];
  const decimals = Math.max(0, -Math.floor(Math.log10(step)) + (step / mag === 2.5 ? 1 : 0));
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    const value = Math.abs(v) < step * 1e-9 ? 0 : v;
    ticks.push({ value, label: value.toFixed(decimals) });
  }
  return ticks;
}

export function dataRange(panel: Panel): { x: [number, number]; y: [number, number] } {
  let xlo = Infinity, xhi = -Infinity, ylo = Infinity, yhi = -Infinity;
  const see = (x: number, y: number) => {
    if (Number.isFinite(x)) { xlo = Math.min(xlo, x); xhi = Math.max(xhi, x); }
    if (Number.isFinite(y)) { ylo = Math.min(ylo, y); yhi = Math.max(yhi, y); }
  };
  for (const el of panel.elements) {
    if (el.type === "curve" || el.type === "points") {
      el.xs.forEach((x, i) => see(x, el.ys[i]));
    } else if (el.type === "band") {
      el.xs.forEach((x, i) => { see(x, el.lo[i]); see(x, el.hi[i]); });
    } else {
      see(el.x, NaN);
    }
  }
  if (!Number.isFinite(xlo)) { xlo = 0; xhi = 1; }
  if (!Number.isFinite(ylo)) { ylo = 0; yhi = 1; }
  if (panel.xRange) [xlo, xhi] = panel.xRange;
  if (panel.yRange) [ylo, yhi] = panel.yRange;
  const padY = 0.05 * (yhi - ylo || 1);
  return { x: [xlo, xhi], y: [ylo - (panel.yRange ? 0 : padY), yhi + padY] };
}

export interface PanelLayout {
  panel: Panel;
  // pixel rectangle of the plotting area
  px: number;
  py: number;
  pw: number;
  ph: number;
  x: (v: number) => number;
  y: (v: number) => number;
  xTicks: Tick[];
  yTicks: Tick[];
}

export interface FigureLayout {
  figure: Figure;
  width: number;
  height: number;
  panels: PanelLayout[];
}

const MARGIN = { left: 52, right: 12, top: 30, bottom: 34 };

export function layoutFigure(fig: Figure): FigureLayout {
  const n = fig.panels.length;
  const ncols = n <= 1 ? 1 : n <= 4 ? 2 : 3;
  const nrows = Math.ceil(n / ncols);
  const panelW = 330;
  const panelH = 240;
  const legendH = fig.legend.length > 0 ? 22 : 0;
  const titleH = 26;
  const width = fig.width ?? ncols * panelW + 16;
  const height = fig.height ?? titleH + legendH + nrows * panelH + 8;
  const panels: PanelLayout[] = fig.panels.map((panel, k) => {
    const col = k % ncols;
    const row = Math.floor(k / ncols);
    const x0 = 8 + col * panelW + MARGIN.left;
    const y0 = titleH + legendH + row * panelH + MARGIN.top;
    const pw = panelW - MARGIN.left - MARGIN.right;
    const ph = panelH - MARGIN.top - MARGIN.bottom;
    const { x: xr, y: yr } = dataRange(panel);
    const xTicks = niceTicks(xr[0], xr[1]).filter((t) => t.value >= xr[0] && t.value <= xr[1]);
    const yTicks = niceTicks(yr[0], yr[1]).filter((t) => t.value >= yr[0] && t.value <= yr[1]);
    return {
      panel,
      px: x0,
      py: y0,
      pw,
      ph,
      x: (v: number) => x0 + ((v - xr[0]) / (xr[1] - xr[0])) * pw,
      y: (v: number) => y0 + ph - ((v - yr[0]) / (yr[1] - yr[0])) * ph,
      xTicks,
      yTicks,
    };
  });
  return { figure: fig, width, height, panels };
}

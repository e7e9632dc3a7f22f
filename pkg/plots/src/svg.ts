/**
 * SVG backend. Elements carry class attributes naming their role
 * (curve/band/truth-marker/...) so figures are machine-checkable.
 */

import { FigureLayout, PanelLayout } from "./geometry.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

function polylinePoints(layout: PanelLayout, xs: number[], ys: number[]): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isFinite(xs[i]) && Number.isFinite(ys[i])) {
      parts.push(`${fmt(layout.x(xs[i]))},${fmt(layout.y(ys[i]))}`);
    }
  }
  return parts.join(" ");
}

function renderPanel(layout: PanelLayout): string {
  const { panel, px, py, pw, ph } = layout;
  const out: string[] = [];
  out.push(`<g class="panel">`);
  out.push(`<rect class="frame" x="${px}" y="${py}" width="${pw}" height="${ph}" fill="none" stroke="#333" stroke-width="1"/>`);
  for (const t of layout.xTicks) {
    const x = layout.x(t.value);
    out.push(`<line x1="${fmt(x)}" y1="${py + ph}" x2="${fmt(x)}" y2="${py + ph + 4}" stroke="#333"/>`);
    out.push(`<text class="tick" x="${fmt(x)}" y="${py + ph + 16}" font-size="10" text-anchor="middle">${esc(t.label)}</text>`);
  }
  for (const t of layout.yTicks) {
    const y = layout.y(t.value);
    out.push(`<line x1="${px - 4}" y1="${fmt(y)}" x2="${px}" y2="${fmt(y)}" stroke="#333"/>`);
    out.push(`<text class="tick" x="${px - 7}" y="${fmt(y + 3)}" font-size="10" text-anchor="end">${esc(t.label)}</text>`);
  }
  out.push(`<text class="panel-title" x="${px + pw / 2}" y="${py - 8}" font-size="12" text-anchor="middle">${esc(panel.title)}</text>`);
  if (panel.xLabel) {
    out.push(`<text class="axis-label" x="${px + pw / 2}" y="${py + ph + 30}" font-size="11" text-anchor="middle">${esc(panel.xLabel)}</text>`);
  }
  for (const el of panel.elements) {
    if (el.type === "band") {
      const fwd = polylinePoints(layout, el.xs, el.hi);
      const back = polylinePoints(layout, [...el.xs].reverse(), [...el.lo].reverse());
      out.push(`<polygon class="${esc(el.cls)}" points="${fwd} ${back}" fill="${el.color}" fill-opacity="0.3" stroke="none"/>`);
    } else if (el.type === "curve") {
      const dash = el.dash ? ` stroke-dasharray="5,3"` : "";
      out.push(`<polyline class="${esc(el.cls)}" points="${polylinePoints(layout, el.xs, el.ys)}" fill="none" stroke="${el.color}" stroke-width="${el.width ?? 1.5}"${dash}/>`);
    } else if (el.type === "vline") {
      const x = fmt(layout.x(el.x));
      const dash = el.dash === false ? "" : ` stroke-dasharray="4,3"`;
      out.push(`<line class="${esc(el.cls)}" x1="${x}" y1="${py}" x2="${x}" y2="${py + ph}" stroke="${el.color}" stroke-width="1.5"${dash}/>`);
    } else {
      const pts = el.xs
        .map((x, i) => `<circle class="${esc(el.cls)}" cx="${fmt(layout.x(x))}" cy="${fmt(layout.y(el.ys[i]))}" r="1.8" fill="${el.color}"/>`)
        .join("");
      out.push(pts);
    }
  }
  out.push(`</g>`);
  return out.join("\n");
}

export function renderSvg(layout: FigureLayout): string {
  const { figure, width, height } = layout;
  const out: string[] = [];
  out.push(`<?xml version="1.0" encoding="UTF-8"?>`);
  out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`);
  out.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  out.push(`<text class="figure-title" x="${width / 2}" y="18" font-size="14" text-anchor="middle">${esc(figure.title)}</text>`);
  let lx = 12;
  const ly = 34;
  for (const item of figure.legend) {
    if (item.kind === "band") {
      out.push(`<rect class="legend-swatch" x="${lx}" y="${ly - 8}" width="16" height="9" fill="${item.color}" fill-opacity="0.3"/>`);
    } else if (item.kind === "points") {
      out.push(`<circle class="legend-swatch" cx="${lx + 8}" cy="${ly - 4}" r="2.5" fill="${item.color}"/>`);
    } else {
      const dash = item.kind === "dash" ? ` stroke-dasharray="5,3"` : "";
      out.push(`<line class="legend-swatch" x1="${lx}" y1="${ly - 4}" x2="${lx + 16}" y2="${ly - 4}" stroke="${item.color}" stroke-width="2"${dash}/>`);
    }
    out.push(`<text class="legend-label" x="${lx + 20}" y="${ly}" font-size="11">${esc(item.label)}</text>`);
    lx += 26 + item.label.length * 6.2;
  }
  for (const panel of layout.panels) {
    out.push(renderPanel(panel));
  }
  out.push(`</svg>`);
  return out.join("\n") + "\n";
}

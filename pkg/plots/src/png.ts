/**
 * PNG backend: a small software rasterizer over an RGBA buffer plus a
 * from-scratch PNG encoder (deflate via node:zlib). Output bytes are a
 * pure function of the figure layout.
 */

import * as zlib from "node:zlib";
import { FigureLayout, PanelLayout } from "./geometry.js";
import { GLYPH_ADVANCE, GLYPH_HEIGHT, glyphStrokes } from "./font.js";

type RGB = [number, number, number];

function parseColor(hex: string): RGB {
  const h = hex.replace("#", "");
  return [parseInt(h.slice(0, 2), 16), parseInt(h.slice(2, 4), 16), parseInt(h.slice(4, 6), 16)];
}

export class Raster {
  data: Uint8ClampedArray;

  constructor(public width: number, public height: number) {
    this.data = new Uint8ClampedArray(width * height * 4);
    this.data.fill(255);
  }

  blend(x: number, y: number, rgb: RGB, alpha: number): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const k = (y * this.width + x) * 4;
    for (let c = 0; c < 3; c++) {
      this.data[k + c] = Math.round(rgb[c] * alpha + this.data[k + c] * (1 - alpha));
    }
    this.data[k + 3] = 255;
  }

  line(x0: number, y0: number, x1: number, y1: number, rgb: RGB, width = 1, alpha = 1): void {
    // draw as dense point samples; cheap and watertight for chart scale
    const dx = x1 - x0;
    const dy = y1 - y0;
    const steps = Math.max(Math.abs(dx), Math.abs(dy), 1) * 2;
    const r = width / 2;
    for (let s = 0; s <= steps; s++) {
      const cx = x0 + (dx * s) / steps;
      const cy = y0 + (dy * s) / steps;
      for (let ox = Math.floor(cx - r); ox <= Math.ceil(cx + r); ox++) {
        for (let oy = Math.floor(cy - r); oy <= Math.ceil(cy + r); oy++) {
          const d2 = (ox - cx) ** 2 + (oy - cy) ** 2;
          if (d2 <= r * r + 0.3) this.blend(ox, oy, rgb, alpha);
        }
      }
    }
  }

  dashedLine(x0: number, y0: number, x1: number, y1: number, rgb: RGB, width = 1): void {
    const len = Math.hypot(x1 - x0, y1 - y0);
    const n = Math.max(1, Math.floor(len / 8));
    for (let s = 0; s < n; s++) {
      const a = s / n;
      const b = a + 0.6 / n;
      this.line(
        x0 + (x1 - x0) * a, y0 + (y1 - y0) * a,
        x0 + (x1 - x0) * Math.min(b, 1), y0 + (y1 - y0) * Math.min(b, 1),
        rgb, width,
      );
    }
  }

  vfill(x: number, yLo: number, yHi: number, rgb: RGB, alpha: number): void {
    const lo = Math.ceil(Math.min(yLo, yHi));
    const hi = Math.floor(Math.max(yLo, yHi));
    for (let y = lo; y <= hi; y++) this.blend(x, y, rgb, alpha);
  }

  text(s: string, x: number, y: number, rgb: RGB, size = 10, anchor: "start" | "middle" | "end" = "start"): void {
    const scale = size / (GLYPH_HEIGHT + 1);
    const total = s.length * GLYPH_ADVANCE * scale;
    let cx = anchor === "start" ? x : anchor === "middle" ? x - total / 2 : x - total;
    const baseY = y - GLYPH_HEIGHT * scale;
    for (const ch of s) {
      for (const stroke of glyphStrokes(ch)) {
        for (let i = 1; i < stroke.length; i++) {
          this.line(
            cx + stroke[i - 1][0] * scale, baseY + stroke[i - 1][1] * scale,
            cx + stroke[i][0] * scale, baseY + stroke[i][1] * scale,
            rgb, Math.max(1, size / 10),
          );
        }
      }
      cx += GLYPH_ADVANCE * scale;
    }
  }
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(payload.length, 0);
  head.write(type, 4, "ascii");
  const body = Buffer.concat([Buffer.from(type, "ascii"), Buffer.from(payload)]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head, Buffer.from(payload), crc]);
}

export function encodePng(raster: Raster): Buffer {
  const { width, height, data } = raster;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 6;   // RGBA
  const raw = Buffer.alloc((width * 4 + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (width * 4 + 1)] = 0; // filter: none
    raw.set(data.subarray(y * width * 4, (y + 1) * width * 4), y * (width * 4 + 1) + 1);
  }
  const idat = zlib.deflateSync(raw, { level: 9 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

const BLACK: RGB = [30, 30, 30];

function rasterPanel(r: Raster, layout: PanelLayout): void {
  const { panel, px, py, pw, ph } = layout;
  r.line(px, py, px + pw, py, BLACK);
  r.line(px, py + ph, px + pw, py + ph, BLACK);
  r.line(px, py, px, py + ph, BLACK);
  r.line(px + pw, py, px + pw, py + ph, BLACK);
  for (const t of layout.xTicks) {
    const x = layout.x(t.value);
    r.line(x, py + ph, x, py + ph + 4, BLACK);
    r.text(t.label, x, py + ph + 16, BLACK, 9, "middle");
  }
  for (const t of layout.yTicks) {
    const y = layout.y(t.value);
    r.line(px - 4, y, px, y, BLACK);
    r.text(t.label, px - 7, y + 4, BLACK, 9, "end");
  }
  r.text(panel.title, px + pw / 2, py - 8, BLACK, 11, "middle");
  if (panel.xLabel) r.text(panel.xLabel, px + pw / 2, py + ph + 30, BLACK, 10, "middle");
  for (const el of panel.elements) {
    if (el.type === "band") {
      const rgb = parseColor(el.color);
      for (let x = Math.ceil(layout.x(el.xs[0])); x <= Math.floor(layout.x(el.xs[el.xs.length - 1])); x++) {
        // invert the x projection by scanning the grid
        let k = 0;
        while (k < el.xs.length - 2 && layout.x(el.xs[k + 1]) < x) k++;
        const x0 = layout.x(el.xs[k]);
        const x1 = layout.x(el.xs[k + 1]);
        const f = x1 > x0 ? (x - x0) / (x1 - x0) : 0;
        const lo = el.lo[k] * (1 - f) + el.lo[k + 1] * f;
        const hi = el.hi[k] * (1 - f) + el.hi[k + 1] * f;
        r.vfill(x, layout.y(hi), layout.y(lo), rgb, 0.3);
      }
    } else if (el.type === "curve") {
      const rgb = parseColor(el.color);
      for (let i = 1; i < el.xs.length; i++) {
        if (![el.xs[i - 1], el.ys[i - 1], el.xs[i], el.ys[i]].every(Number.isFinite)) continue;
        const seg: [number, number, number, number] = [
          layout.x(el.xs[i - 1]), layout.y(el.ys[i - 1]), layout.x(el.xs[i]), layout.y(el.ys[i]),
        ];
        if (el.dash) r.dashedLine(...seg, rgb, el.width ?? 1.5);
        else r.line(...seg, rgb, el.width ?? 1.5);
      }
    } else if (el.type === "vline") {
      const rgb = parseColor(el.color);
      r.dashedLine(layout.x(el.x), py, layout.x(el.x), py + ph, rgb, 1.5);
    } else {
      const rgb = parseColor(el.color);
      for (let i = 0; i < el.xs.length; i++) {
        r.line(layout.x(el.xs[i]), layout.y(el.ys[i]), layout.x(el.xs[i]), layout.y(el.ys[i]), rgb, 2.4);
      }
    }
  }
}

export function renderPng(layout: FigureLayout): Buffer {
  const r = new Raster(layout.width, layout.height);
  r.text(layout.figure.title, layout.width / 2, 18, BLACK, 12, "middle");
  let lx = 12;
  const ly = 34;
  for (const item of layout.figure.legend) {
    const rgb = parseColor(item.color);
    if (item.kind === "band") {
      for (let x = lx; x < lx + 16; x++) r.vfill(x, ly - 10, ly - 2, rgb, 0.35);
    } else if (item.kind === "points") {
      r.line(lx + 8, ly - 5, lx + 8, ly - 5, rgb, 3);
    } else if (item.kind === "dash") {
      r.dashedLine(lx, ly - 5, lx + 16, ly - 5, rgb, 2);
    } else {
      r.line(lx, ly - 5, lx + 16, ly - 5, rgb, 2);
    }
    r.text(item.label, lx + 20, ly, BLACK, 9);
    lx += 26 + item.label.length * 6.2;
  }
  for (const panel of layout.panels) {
    rasterPanel(r, panel);
  }
  return encodePng(r);
}

// Local what-if preview: paints the layout with the exact server algorithm
// (background fill, solid rects with a 1px darker border, element order) so a
// preview of an unchanged canvas matches the last served render.

import { Layout } from "./dsl.js";
import { Legend } from "./types.js";

export type Rgb = [number, number, number];

export type PreviewImage = {
  width: number;
  height: number;
  pixels: Uint8ClampedArray; // RGBA, row-major
};

const BORDER_FACTOR = 0.6;

export function hexToRgb(hex: string): Rgb {
  if (!/^[0-9a-fA-F]{6}$/.test(hex)) throw new Error(`bad color ${hex}`);
  return [parseInt(hex.slice(0, 2), 16), parseInt(hex.slice(2, 4), 16), parseInt(hex.slice(4, 6), 16)];
}

export function borderColor(fill: Rgb): Rgb {
  return [Math.floor(fill[0] * BORDER_FACTOR), Math.floor(fill[1] * BORDER_FACTOR), Math.floor(fill[2] * BORDER_FACTOR)];
}

export function legendColors(legend: Legend): Map<string, Rgb> {
  const colors = new Map<string, Rgb>();
  for (const entry of legend.classes) colors.set(entry.name, hexToRgb(entry.rgb));
  return colors;
}

function fillRect(img: PreviewImage, x0: number, y0: number, x1: number, y1: number, rgb: Rgb): void {
  for (let y = y0; y < y1; y++) {
    let offset = (y * img.width + x0) * 4;
    for (let x = x0; x < x1; x++) {
      img.pixels[offset] = rgb[0];
      img.pixels[offset + 1] = rgb[1];
      img.pixels[offset + 2] = rgb[2];
      img.pixels[offset + 3] = 255;
      offset += 4;
    }
  }
}

export function renderPreview(layout: Layout, legend: Legend, scale = 1): PreviewImage {
  if (!Number.isInteger(scale) || scale < 1) throw new Error(`scale must be a positive integer, got ${scale}`);
  const width = layout.canvasW * scale;
  const height = layout.canvasH * scale;
  const img: PreviewImage = { width, height, pixels: new Uint8ClampedArray(width * height * 4) };
  const colors = legendColors(legend);
  fillRect(img, 0, 0, width, height, hexToRgb(legend.background));

  for (const el of layout.elements) {
    const fill = colors.get(el.cls);
    if (!fill) throw new Error(`legend has no color for class ${el.cls}`);
    // clip to the canvas (lenient, matching the server's raw-output mode)
    const cx0 = Math.max(el.x, 0);
    const cy0 = Math.max(el.y, 0);
    const cx1 = Math.min(el.x + el.w, layout.canvasW);
    const cy1 = Math.min(el.y + el.h, layout.canvasH);
    if (cx1 <= cx0 || cy1 <= cy0) continue;
    const px0 = cx0 * scale;
    const py0 = cy0 * scale;
    const px1 = cx1 * scale;
    const py1 = cy1 * scale;
    fillRect(img, px0, py0, px1, py1, borderColor(fill));
    if (px1 - px0 > 2 && py1 - py0 > 2) {
      fillRect(img, px0 + 1, py0 + 1, px1 - 1, py1 - 1, fill);
    }
  }
  return img;
}

export function pixelAt(img: PreviewImage, x: number, y: number): Rgb {
  const offset = (y * img.width + x) * 4;
  return [img.pixels[offset], img.pixels[offset + 1], img.pixels[offset + 2]];
}

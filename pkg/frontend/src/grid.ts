/** Pure view-model builders for the grid: layers, heat colors, weight glyphs.
 *
 * Nothing here computes planning quantities; heat values and weights come
 * straight from server documents and are only normalized for display.
 */
import type { MapDoc, WeightDoc } from "./api.js";

export interface LayerToggles {
  obstacles: boolean;
  heat: boolean;
  weights: boolean;
}

export interface CellView {
  r: number;
  c: number;
  obstacle: boolean;
  /** 0..1 heat intensity; null when the heat layer is off or no data. */
  heat: number | null;
  /** Per-direction weight glyph scale (E,S,W,N), 0..1; null = unusable. */
  glyphs: (number | null)[] | null;
  wait: number | null;
}

export function maxHeat(heatmap: (number | null)[][]): number {
  let best = 0;
  for (const row of heatmap) {
    for (const v of row) {
      if (v !== null && v > best) best = v;
    }
  }
  return best;
}

/** Linear ramp from cool blue to hot red, as a CSS color. */
export function heatColor(intensity: number): string {
  const t = Math.max(0, Math.min(1, intensity));
  const r = Math.round(40 + 215 * t);
  const g = Math.round(60 + 60 * (1 - t));
  const b = Math.round(220 * (1 - t) + 30);
  return `rgb(${r}, ${g}, ${b})`;
}

export function buildCellViews(
  map: MapDoc,
  heatmap: (number | null)[][] | null,
  weights: WeightDoc | null,
  layers: LayerToggles,
): CellView[] {
  const views: CellView[] = [];
  const top = heatmap && layers.heat ? maxHeat(heatmap) : 0;
  let wmax = 0;
  if (weights && layers.weights) {
    for (const row of weights.moves) {
      for (const cell of row) {
        for (const v of cell) {
          if (v !== null && v > wmax) wmax = v;
        }
      }
    }
  }
  for (let r = 0; r < map.height; r++) {
    for (let c = 0; c < map.width; c++) {
      const obstacle = map.rows[r][c] !== ".";
      let heat: number | null = null;
      if (!obstacle && heatmap && layers.heat) {
        const v = heatmap[r][c];
        heat = v === null || top === 0 ? 0 : v / top;
      }
      let glyphs: (number | null)[] | null = null;
      let wait: number | null = null;
      if (!obstacle && weights && layers.weights) {
        glyphs = weights.moves[r][c].map((v) =>
          v === null ? null : wmax > 0 ? v / wmax : 0,
        );
        wait = weights.wait[r][c];
      }
      views.push({ r, c, obstacle, heat, glyphs, wait });
    }
  }
  return views;
}

/** Normalized selection rectangle from two drag corners (cell coords). */
export function selectionRect(
  a: { r: number; c: number },
  b: { r: number; c: number },
) {
  return {
    r0: Math.min(a.r, b.r),
    c0: Math.min(a.c, b.c),
    r1: Math.max(a.r, b.r),
    c1: Math.max(a.c, b.c),
  };
}

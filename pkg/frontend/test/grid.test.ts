import { describe, expect, it } from "vitest";
import type { MapDoc, WeightDoc } from "../src/api.js";
import { buildCellViews, heatColor, maxHeat, selectionRect } from "../src/grid.js";

const map: MapDoc = { height: 2, width: 2, rows: ["..", ".@"] };
const weights: WeightDoc = {
  height: 2,
  width: 2,
  wait: [[1, 1], [1, null]],
  moves: [
    [[2, 1, null, null], [null, null, 1, null]],
    [[null, null, null, 1], [null, null, null, null]],
  ],
};

describe("grid view models", () => {
  it("hottest cell gets full intensity", () => {
    const heat = [[3, 0], [1, null]] as (number | null)[][];
    expect(maxHeat(heat)).toBe(3);
    const views = buildCellViews(map, heat, null, {
      obstacles: true, heat: true, weights: false,
    });
    const byCell = new Map(views.map((v) => [`${v.r},${v.c}`, v]));
    expect(byCell.get("0,0")!.heat).toBe(1);
    expect(byCell.get("1,0")!.heat).toBeCloseTo(1 / 3);
    expect(heatColor(1)).not.toBe(heatColor(0));
  });

  it("obstacle cells carry no editable layers", () => {
    const views = buildCellViews(map, null, weights, {
      obstacles: true, heat: false, weights: true,
    });
    const obstacle = views.find((v) => v.r === 1 && v.c === 1)!;
    expect(obstacle.obstacle).toBe(true);
    expect(obstacle.glyphs).toBeNull();
    expect(obstacle.wait).toBeNull();
  });

  it("weight glyphs normalize to the largest move weight", () => {
    const views = buildCellViews(map, null, weights, {
      obstacles: true, heat: false, weights: true,
    });
    const cell = views.find((v) => v.r === 0 && v.c === 0)!;
    expect(cell.glyphs![0]).toBe(1);     // E weight 2 is the max
    expect(cell.glyphs![1]).toBe(0.5);
    expect(cell.glyphs![2]).toBeNull();  // unusable stays null
  });

  it("selection rectangle normalizes drag corners", () => {
    expect(selectionRect({ r: 3, c: 5 }, { r: 1, c: 7 }))
      .toEqual({ r0: 1, c0: 5, r1: 3, c1: 7 });
  });

  it("zero heat everywhere renders zero intensity", () => {
    const views = buildCellViews(map, [[0, 0], [0, null]], null, {
      obstacles: true, heat: true, weights: false,
    });
    expect(views.find((v) => v.r === 0 && v.c === 0)!.heat).toBe(0);
  });
});

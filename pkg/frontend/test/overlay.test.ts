import { describe, expect, it } from "vitest";
import type { WeightDoc } from "../src/api.js";
import { WeightOverlay, cloneDoc, docsEqual } from "../src/overlay.js";

function doc2x2(): WeightDoc {
  // 2x2 map with an obstacle at (1,1); E,S,W,N order.
  return {
    height: 2,
    width: 2,
    wait: [
      [1, 1],
      [1, null],
    ],
    moves: [
      [[1, 1, null, null], [null, null, 1, null]],
      [[null, null, null, 1], [null, null, null, null]],
    ],
  };
}

describe("WeightOverlay", () => {
  it("scales exactly the usable weights in the selection", () => {
    const overlay = new WeightOverlay(doc2x2());
    const touched = overlay.scaleRegion({ r0: 0, c0: 0, r1: 0, c1: 1 }, 2);
    // Row 0: two waits + three usable directions.
    expect(touched).toBe(5);
    expect(overlay.current.wait[0][0]).toBe(2);
    expect(overlay.current.moves[0][0][0]).toBe(2);
    expect(overlay.current.moves[0][0][2]).toBeNull();
    expect(overlay.current.moves[1][0][3]).toBe(1); // outside selection
    expect(overlay.dirty).toBe(true);
  });

  it("can restrict scaling to waits or moves", () => {
    const overlay = new WeightOverlay(doc2x2());
    expect(overlay.scaleRegion({ r0: 0, c0: 0, r1: 1, c1: 1 }, 3, "wait")).toBe(3);
    expect(overlay.current.moves[0][0][0]).toBe(1);
    expect(overlay.current.wait[0][1]).toBe(3);
  });

  it("rejects non-positive factors and values", () => {
    const overlay = new WeightOverlay(doc2x2());
    expect(() => overlay.scaleRegion({ r0: 0, c0: 0, r1: 0, c1: 0 }, 0)).toThrow();
    expect(() => overlay.setWait(0, 0, -1)).toThrow();
    expect(() => overlay.setMove(0, 0, 0, 0)).toThrow();
  });

  it("refuses direct entry on unusable entries", () => {
    const overlay = new WeightOverlay(doc2x2());
    expect(() => overlay.setWait(1, 1, 2)).toThrow();
    expect(() => overlay.setMove(0, 0, 2, 2)).toThrow();
  });

  it("revert restores the pre-edit snapshot (stack semantics)", () => {
    const overlay = new WeightOverlay(doc2x2());
    const before = cloneDoc(overlay.current);
    overlay.scaleRegion({ r0: 0, c0: 0, r1: 1, c1: 1 }, 1.5);
    overlay.recordEvaluation(0.1, 0);
    expect(docsEqual(overlay.current, before)).toBe(false);
    overlay.revert();
    expect(docsEqual(overlay.current, before)).toBe(true);
    expect(overlay.history.length).toBe(0);
    expect(overlay.dirty).toBe(false);
  });

  it("keep commits the evaluated weights as the new baseline", () => {
    const overlay = new WeightOverlay(doc2x2());
    overlay.scaleRegion({ r0: 0, c0: 0, r1: 1, c1: 1 }, 1.5);
    const edited = cloneDoc(overlay.current);
    overlay.recordEvaluation(0.2, 1);
    overlay.keep();
    expect(docsEqual(overlay.baselineDoc(), edited)).toBe(true);
    // A later revert returns to the kept weights, not the original ones.
    overlay.scaleRegion({ r0: 0, c0: 0, r1: 0, c1: 0 }, 2);
    overlay.recordEvaluation(0.05, 2);
    overlay.revert();
    expect(docsEqual(overlay.current, edited)).toBe(true);
  });

  it("tracks the best committed throughput", () => {
    const overlay = new WeightOverlay(doc2x2());
    overlay.recordEvaluation(0.3, 0);
    overlay.recordEvaluation(0.5, 1);
    overlay.recordEvaluation(0.4, 2);
    expect(overlay.bestThroughput()).toBe(0.5);
  });
});

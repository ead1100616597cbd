/** The editable weight overlay: pending edits, validation, commit history.
 *
 * Edits are multiplicative scalings over a selected region (optionally
 * restricted to moves or waits) plus direct single-entry assignment. Null
 * entries mark unusable directions and obstacle cells; they are never
 * touched. Committed snapshots carry the run id and throughput the server
 * measured for them, so any history entry can be replayed exactly.
 */
import type { WeightDoc } from "./api.js";

export interface HistoryEntry {
  doc: WeightDoc;
  throughput: number;
  runId: number;
}

export interface Region {
  r0: number;
  c0: number;
  r1: number; // inclusive
  c1: number;
}

export function cloneDoc(doc: WeightDoc): WeightDoc {
  return {
    height: doc.height,
    width: doc.width,
    wait: doc.wait.map((row) => row.slice()),
    moves: doc.moves.map((row) => row.map((cell) => cell.slice())),
  };
}

export function docsEqual(a: WeightDoc, b: WeightDoc): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}

function checkPositive(value: number, where: string): void {
  if (!Number.isFinite(value) || value <= 0) {
    throw new Error(`${where}: weight must be finite and > 0, got ${value}`);
  }
}

export class WeightOverlay {
  /** Working copy with pending edits applied. */
  current: WeightDoc;
  /** Last committed weights; revert() restores this. */
  private baseline: WeightDoc;
  private readonly history_: HistoryEntry[] = [];
  dirty = false;

  constructor(initial: WeightDoc) {
    this.baseline = cloneDoc(initial);
    this.current = cloneDoc(initial);
  }

  get history(): readonly HistoryEntry[] {
    return this.history_;
  }

  bestThroughput(): number | null {
    if (this.history_.length === 0) return null;
    return Math.max(...this.history_.map((h) => h.throughput));
  }

  /** Multiply every usable weight inside the region by factor. */
  scaleRegion(region: Region, factor: number,
              target: "moves" | "wait" | "both" = "both"): number {
    checkPositive(factor, "scale factor");
    const { r0, c0, r1, c1 } = region;
    let touched = 0;
    for (let r = Math.max(0, r0); r <= Math.min(this.current.height - 1, r1); r++) {
      for (let c = Math.max(0, c0); c <= Math.min(this.current.width - 1, c1); c++) {
        if (target !== "moves") {
          const w = this.current.wait[r][c];
          if (w !== null) {
            this.current.wait[r][c] = w * factor;
            touched++;
          }
        }
        if (target !== "wait") {
          for (let d = 0; d < 4; d++) {
            const m = this.current.moves[r][c][d];
            if (m !== null) {
              this.current.moves[r][c][d] = m * factor;
              touched++;
            }
          }
        }
      }
    }
    if (touched > 0) this.dirty = true;
    return touched;
  }

  setMove(r: number, c: number, direction: number, value: number): void {
    if (this.current.moves[r][c][direction] === null) {
      throw new Error(`(${r}, ${c}) direction ${direction} is unusable`);
    }
    checkPositive(value, `moves[${r}][${c}][${direction}]`);
    this.current.moves[r][c][direction] = value;
    this.dirty = true;
  }

  setWait(r: number, c: number, value: number): void {
    if (this.current.wait[r][c] === null) {
      throw new Error(`(${r}, ${c}) is an obstacle`);
    }
    checkPositive(value, `wait[${r}][${c}]`);
    this.current.wait[r][c] = value;
    this.dirty = true;
  }

  /** Record the evaluated snapshot (run id comes from the serve response). */
  recordEvaluation(throughput: number, runId: number): void {
    this.history_.push({ doc: cloneDoc(this.current), throughput, runId });
  }

  /** Keep the last evaluated edit: it becomes the new baseline. */
  keep(): void {
    if (this.history_.length === 0) {
      throw new Error("nothing evaluated yet");
    }
    this.baseline = cloneDoc(this.history_[this.history_.length - 1].doc);
    this.current = cloneDoc(this.baseline);
    this.dirty = false;
  }

  /** Drop the last evaluated edit and restore the pre-edit weights. */
  revert(): HistoryEntry | undefined {
    const popped = this.history_.pop();
    this.current = cloneDoc(this.baseline);
    this.dirty = false;
    return popped;
  }

  baselineDoc(): WeightDoc {
    return cloneDoc(this.baseline);
  }
}

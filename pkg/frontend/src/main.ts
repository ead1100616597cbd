/** Browser entry: canvas grid, layer toggles, region scaling, run history. */
import { StudioApi } from "./api.js";
import { buildCellViews, heatColor, selectionRect, LayerToggles } from "./grid.js";
import { StudioSession } from "./session.js";

const CELL = 18;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class StudioView {
  private layers: LayerToggles = { obstacles: true, heat: true, weights: true };
  private dragStart: { r: number; c: number } | null = null;
  private selection: { r0: number; c0: number; r1: number; c1: number } | null = null;
  private canvas = el<HTMLCanvasElement>("grid");
  private status = el<HTMLElement>("status");
  private history = el<HTMLElement>("history");

  constructor(private session: StudioSession) {}

  async start(): Promise<void> {
    await this.session.load();
    const map = this.session.map!;
    this.canvas.width = map.width * CELL;
    this.canvas.height = map.height * CELL;
    this.canvas.addEventListener("mousedown", (e) => {
      this.dragStart = this.cellAt(e);
    });
    this.canvas.addEventListener("mousemove", (e) => {
      if (this.dragStart) {
        this.selection = selectionRect(this.dragStart, this.cellAt(e));
        this.draw();
      }
    });
    window.addEventListener("mouseup", () => (this.dragStart = null));
    for (const name of ["obstacles", "heat", "weights"] as const) {
      el<HTMLInputElement>(`layer-${name}`).addEventListener("change", (e) => {
        this.layers[name] = (e.target as HTMLInputElement).checked;
        this.draw();
      });
    }
    el<HTMLButtonElement>("scale-apply").addEventListener("click", () => this.applyScale());
    el<HTMLButtonElement>("evaluate").addEventListener("click", () => this.evaluate());
    el<HTMLButtonElement>("keep").addEventListener("click", () => this.keep());
    el<HTMLButtonElement>("revert").addEventListener("click", () => this.revert());
    el<HTMLInputElement>("seed").addEventListener("change", (e) => {
      this.session.evalSeed = Number((e.target as HTMLInputElement).value);
    });
    this.draw();
    this.say("loaded; drag to select a region, then scale and evaluate");
  }

  private cellAt(e: MouseEvent): { r: number; c: number } {
    const rect = this.canvas.getBoundingClientRect();
    return {
      r: Math.floor((e.clientY - rect.top) / CELL),
      c: Math.floor((e.clientX - rect.left) / CELL),
    };
  }

  private applyScale(): void {
    if (!this.selection || !this.session.overlay) {
      this.say("select a region first");
      return;
    }
    const factor = Number(el<HTMLInputElement>("scale-factor").value);
    const target = el<HTMLSelectElement>("scale-target").value as
      | "moves" | "wait" | "both";
    try {
      const touched = this.session.overlay.scaleRegion(this.selection, factor, target);
      this.say(`scaled ${touched} weights by ${factor}`);
    } catch (err) {
      this.say(String(err));
    }
    this.draw();
  }

  private async evaluate(): Promise<void> {
    this.say("simulating...");
    try {
      const view = await this.session.evaluate();
      const delta = view.deltaVsBest === null ? "" :
        ` (${view.deltaVsBest >= 0 ? "+" : ""}${view.deltaVsBest.toFixed(4)} vs best)`;
      this.say(`run ${view.runId}: throughput ${view.throughput.toFixed(4)}${delta}`);
      this.renderHistory();
    } catch (err) {
      this.say(String(err));
    }
    this.draw();
  }

  private keep(): void {
    try {
      this.session.keep();
      this.say(`kept; best throughput ${this.session.bestThroughput?.toFixed(4)}`);
    } catch (err) {
      this.say(String(err));
    }
  }

  private async revert(): Promise<void> {
    try {
      await this.session.revert();
      this.say("reverted to the last kept weights");
      this.renderHistory();
    } catch (err) {
      this.say(String(err));
    }
    this.draw();
  }

  private renderHistory(): void {
    const entries = this.session.overlay?.history ?? [];
    this.history.innerHTML = entries
      .map((h) => `<li>run ${h.runId}: ${h.throughput.toFixed(4)}</li>`)
      .join("");
  }

  private say(text: string): void {
    this.status.textContent = text;
  }

  private draw(): void {
    const { map, heatmap, overlay } = this.session;
    if (!map) return;
    const ctx = this.canvas.getContext("2d")!;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const views = buildCellViews(map, heatmap, overlay?.current ?? null, this.layers);
    for (const cell of views) {
      const x = cell.c * CELL;
      const y = cell.r * CELL;
      if (cell.obstacle) {
        ctx.fillStyle = this.layers.obstacles ? "#222" : "#eee";
        ctx.fillRect(x, y, CELL, CELL);
        continue;
      }
      ctx.fillStyle = cell.heat !== null ? heatColor(cell.heat) : "#fafafa";
      ctx.fillRect(x, y, CELL, CELL);
      if (cell.glyphs) {
        // E,S,W,N arrows scaled by relative weight.
        const cx = x + CELL / 2;
        const cy = y + CELL / 2;
        const dirs = [[1, 0], [0, 1], [-1, 0], [0, -1]];
        ctx.strokeStyle = "#064";
        for (let d = 0; d < 4; d++) {
          const g = cell.glyphs[d];
          if (g === null) continue;
          const len = 2 + g * (CELL / 2 - 3);
          ctx.beginPath();
          ctx.moveTo(cx, cy);
          ctx.lineTo(cx + dirs[d][0] * len, cy + dirs[d][1] * len);
          ctx.stroke();
        }
      }
      ctx.strokeStyle = "#ddd";
      ctx.strokeRect(x, y, CELL, CELL);
    }
    if (this.selection) {
      const { r0, c0, r1, c1 } = this.selection;
      ctx.strokeStyle = "#f80";
      ctx.lineWidth = 2;
      ctx.strokeRect(c0 * CELL, r0 * CELL, (c1 - c0 + 1) * CELL, (r1 - r0 + 1) * CELL);
      ctx.lineWidth = 1;
    }
  }
}

const base = (document.getElementById("server-url") as HTMLInputElement | null)?.value
  ?? "http://127.0.0.1:8927";
new StudioView(new StudioSession(new StudioApi(base))).start().catch((err) => {
  document.getElementById("status")!.textContent = `failed to load: ${err}`;
});

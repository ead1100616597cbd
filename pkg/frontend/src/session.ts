/** Studio controller: the edit -> evaluate -> keep/revert loop.
 *
 * Every number the UI shows is taken verbatim from a serve response; the
 * session never recomputes throughput or heat. The evaluation seed is fixed
 * per session (changeable) so successive edits are compared like with like.
 */
import { StudioApi } from "./api.js";
import type { MapDoc, SimulateResponse, WeightDoc } from "./api.js";
import { WeightOverlay } from "./overlay.js";

export interface EvaluationView {
  runId: number;
  throughput: number;
  goalsReached: number;
  steps: number;
  configDigest: string;
  /** Relative to the best committed run so far; null on the first run. */
  deltaVsBest: number | null;
}

export class StudioSession {
  map: MapDoc | null = null;
  overlay: WeightOverlay | null = null;
  heatmap: (number | null)[][] | null = null;
  lastResult: SimulateResponse | null = null;
  lastView: EvaluationView | null = null;
  bestThroughput: number | null = null;
  evalSeed = 7;
  evalSteps = 200;
  algorithm: "pibt" | "wppl" = "pibt";
  busy = false;

  constructor(readonly api: StudioApi) {}

  async load(): Promise<void> {
    this.map = await this.api.getMap();
    this.overlay = new WeightOverlay(await this.api.getWeights());
  }

  /** Push the current overlay to the server and run one fixed-seed simulation. */
  async evaluate(): Promise<EvaluationView> {
    if (!this.overlay) throw new Error("session not loaded");
    if (this.busy) throw new Error("a simulation is already in flight");
    this.busy = true;
    try {
      await this.api.putWeights(this.overlay.current);
      const result = await this.api.simulate({
        steps: this.evalSteps,
        seed: this.evalSeed,
        algorithm: this.algorithm,
      });
      this.lastResult = result;
      this.heatmap = result.heatmap;
      this.overlay.recordEvaluation(result.throughput, result.run_id);
      const delta =
        this.bestThroughput === null ? null : result.throughput - this.bestThroughput;
      this.lastView = {
        runId: result.run_id,
        throughput: result.throughput,
        goalsReached: result.goals_reached,
        steps: result.steps,
        configDigest: result.config_digest,
        deltaVsBest: delta,
      };
      return this.lastView;
    } finally {
      this.busy = false;
    }
  }

  /** Accept the evaluated edit; it becomes the comparison baseline. */
  keep(): void {
    if (!this.overlay || !this.lastResult) throw new Error("nothing to keep");
    this.overlay.keep();
    if (this.bestThroughput === null || this.lastResult.throughput > this.bestThroughput) {
      this.bestThroughput = this.lastResult.throughput;
    }
  }

  /** Discard the evaluated edit and restore the pre-edit weights everywhere. */
  async revert(): Promise<void> {
    if (!this.overlay) throw new Error("session not loaded");
    this.overlay.revert();
    await this.api.putWeights(this.overlay.current);
  }
}

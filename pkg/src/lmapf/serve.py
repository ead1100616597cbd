"""Local HTTP service for interactive guidance tuning.

JSON request/response bodies over a local socket (api version 1):

    GET  /            -> service info and endpoint list
    GET  /map         -> {height, width, rows}
    GET  /weights     -> current weight overlay (weight-file schema)
    PUT  /weights     -> replace the in-memory overlay (validated)
    POST /simulate    -> {steps?, seed?, algorithm?} -> {run_id, throughput, ...}
    GET  /runs        -> submission-ordered run history
    POST /weights/save-> {path?} persist the overlay to disk

The service never rewrites its input files; the overlay lives in memory
until /weights/save is called. Simulations run one at a time under a lock;
read endpoints stay available meanwhile.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import RunConfig, derive_seeds
from .domain import Instance, ParseError
from .guidance import GuidanceGraph, NonPositiveWeight, weights_from_doc, weights_to_doc
from .pibt import PriorityState
from .simulator import UniformRandomAssigner, heatmap_grid, simulate
from .wppl import WpplPlanner

API_VERSION = 1


@dataclass
class RunRecord:
    run_id: int
    config_digest: str
    throughput: float


@dataclass
class ServeState:
    cfg: RunConfig
    instance: Instance
    guidance: GuidanceGraph
    runs: list[RunRecord] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    _next_run_id: int = 0

    def set_weights(self, doc) -> None:
        new = weights_from_doc(self.instance.grid, doc)
        with self.lock:
            self.guidance = new

    def weights_doc(self) -> dict:
        with self.lock:
            return weights_to_doc(self.guidance)

    def run_simulation(self, steps: int, seed: int, algorithm: str) -> dict:
        if steps < 1:
            raise ValueError("steps must be >= 1")
        if algorithm not in ("pibt", "wppl"):
            raise ValueError("algorithm must be pibt or wppl")
        with self.lock:
            guidance = self.guidance
            digest_src = json.dumps(
                {"steps": steps, "seed": seed, "algorithm": algorithm,
                 "weights": weights_to_doc(guidance)},
                sort_keys=True).encode()
            digest = hashlib.sha256(digest_src).hexdigest()[:12]
            seeds = derive_seeds(seed)
            planner = WpplPlanner(
                self.instance.grid, guidance,
                self.cfg.wppl_config(seeds.planner),
                self.instance.action_model, algorithm)
            assigner = UniformRandomAssigner(self.instance.grid, seeds.assigner)
            metrics, _ = simulate(
                self.instance, planner, assigner, steps,
                planner.cfg.disable, seeds.policy, seeds.priorities,
                record_trajectory=False)
            run_id = self._next_run_id
            self._next_run_id += 1
            self.runs.append(RunRecord(run_id, digest, metrics.throughput))
            return {
                "run_id": run_id,
                "config_digest": digest,
                "throughput": metrics.throughput,
                "goals_reached": metrics.goals_reached,
                "steps": metrics.steps,
                "heatmap": heatmap_grid(metrics, self.instance.grid),
            }

    def save_weights(self, path: str | None) -> str:
        import os

        from .guidance import save_weights as save_to_file

        target = path or os.path.join(self.cfg.out, "weights.json")
        os.makedirs(os.path.dirname(target) or ".", exist_ok=True)
        with self.lock:
            save_to_file(self.guidance, target)
        return target


class _Handler(BaseHTTPRequestHandler):
    state: ServeState  # injected by make_server

    def log_message(self, fmt, *args):  # silence per-request stderr noise
        pass

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._send(code, {"error": message})

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            return json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"request body: {e.msg}") from None

    def do_GET(self):
        state = self.state
        if self.path == "/":
            self._send(200, {
                "service": "lmapf-serve",
                "api_version": API_VERSION,
                "endpoints": ["/map", "/weights", "/simulate", "/runs",
                              "/weights/save"],
            })
        elif self.path == "/map":
            grid = state.instance.grid
            self._send(200, {"height": grid.height, "width": grid.width,
                             "rows": grid.rows()})
        elif self.path == "/weights":
            self._send(200, state.weights_doc())
        elif self.path == "/runs":
            self._send(200, {"runs": [
                {"run_id": r.run_id, "config_digest": r.config_digest,
                 "throughput": r.throughput}
                for r in state.runs
            ]})
        else:
            self._error(404, f"unknown path {self.path}")

    def do_PUT(self):
        if self.path != "/weights":
            self._error(404, f"unknown path {self.path}")
            return
        try:
            self.state.set_weights(self._body())
        except (ParseError, NonPositiveWeight, ValueError) as e:
            self._error(400, str(e))
            return
        self._send(200, {"ok": True})

    def do_POST(self):
        state = self.state
        if self.path == "/simulate":
            try:
                body = self._body()
                result = state.run_simulation(
                    steps=int(body.get("steps", state.cfg.steps)),
                    seed=int(body.get("seed", state.cfg.seed)),
                    algorithm=body.get("algorithm", state.cfg.algorithm),
                )
            except (ParseError, ValueError, TypeError) as e:
                self._error(400, str(e))
                return
            self._send(200, result)
        elif self.path == "/weights/save":
            try:
                body = self._body()
                target = state.save_weights(body.get("path"))
            except (ParseError, OSError, ValueError) as e:
                self._error(400, str(e))
                return
            self._send(200, {"ok": True, "path": target})
        else:
            self._error(404, f"unknown path {self.path}")


def make_server(state: ServeState, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)

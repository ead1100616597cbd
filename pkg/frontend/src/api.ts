/** Typed client for the lmapf serve endpoints (JSON over HTTP, api v1). */

export interface MapDoc {
  height: number;
  width: number;
  rows: string[]; // '.' free, '@' obstacle
}

/** Weight-file schema: wait HxW, moves HxWx4 in E,S,W,N order; null = unusable. */
export interface WeightDoc {
  height: number;
  width: number;
  wait: (number | null)[][];
  moves: (number | null)[][][];
}

export interface SimulateRequest {
  steps?: number;
  seed?: number;
  algorithm?: "pibt" | "wppl";
}

export interface SimulateResponse {
  run_id: number;
  config_digest: string;
  throughput: number;
  goals_reached: number;
  steps: number;
  heatmap: (number | null)[][];
}

export interface RunRecord {
  run_id: number;
  config_digest: string;
  throughput: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
  }
  return body as T;
}

export class StudioApi {
  constructor(readonly baseUrl: string) {}

  getMap(): Promise<MapDoc> {
    return request<MapDoc>(`${this.baseUrl}/map`);
  }

  getWeights(): Promise<WeightDoc> {
    return request<WeightDoc>(`${this.baseUrl}/weights`);
  }

  putWeights(doc: WeightDoc): Promise<{ ok: boolean }> {
    return request(`${this.baseUrl}/weights`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  simulate(req: SimulateRequest): Promise<SimulateResponse> {
    return request(`${this.baseUrl}/simulate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  getRuns(): Promise<{ runs: RunRecord[] }> {
    return request(`${this.baseUrl}/runs`);
  }

  saveWeights(path?: string): Promise<{ ok: boolean; path: string }> {
    return request(`${this.baseUrl}/weights/save`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(path ? { path } : {}),
    });
  }
}

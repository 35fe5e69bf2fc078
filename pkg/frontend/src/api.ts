import type { GenerateResponse, ReplaceResponse, SceneJson } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Another mutation is already running on this session. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = "ConflictError";
  }
}

/** The session is unknown to the server (expired or bad id). */
export class SessionNotFoundError extends ApiError {
  constructor(message: string) {
    super(404, message);
    this.name = "SessionNotFoundError";
  }
}

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

async function raiseForStatus(url: string, res: { status: number; json(): Promise<unknown> }) {
  if (res.status >= 200 && res.status < 300) return;
  let detail = `HTTP ${res.status}`;
  try {
    const body = (await res.json()) as { detail?: string };
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  if (res.status === 409) throw new ConflictError(detail);
  if (res.status === 404) throw new SessionNotFoundError(detail);
  throw new ApiError(res.status, `${url}: ${detail}`);
}

/** Thin typed client for the scene-editing service. The UI never computes
 * scene content itself: every mutation round-trips through these calls. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    const res = await this.fetchImpl(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    await raiseForStatus(url, res);
    return (await res.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    const res = await this.fetchImpl(url);
    await raiseForStatus(url, res);
    return (await res.json()) as T;
  }

  async createSession(payload: {
    scene?: SceneJson;
    floor?: [number, number][];
    room_type?: string;
  }): Promise<string> {
    const body = await this.post<{ session_id: string }>("/sessions", payload);
    return body.session_id;
  }

  async getScene(sessionId: string): Promise<SceneJson> {
    const body = await this.get<{ scene: SceneJson }>(`/sessions/${sessionId}`);
    return body.scene;
  }

  async generate(
    sessionId: string,
    req: { prompt?: string; w0?: number; seed?: number },
  ): Promise<GenerateResponse> {
    return this.post<GenerateResponse>(`/sessions/${sessionId}/generate`, req);
  }

  async replace(
    sessionId: string,
    req: { instance_id: number; prompt: string; seed?: number },
  ): Promise<ReplaceResponse> {
    return this.post<ReplaceResponse>(`/sessions/${sessionId}/replace`, req);
  }

  async getHistory(sessionId: string): Promise<unknown[]> {
    const body = await this.get<{ events: unknown[] }>(`/sessions/${sessionId}/history`);
    return body.events;
  }

  async searchAssets(query: string, k: number): Promise<string[]> {
    const q = encodeURIComponent(query);
    const body = await this.get<{ ids: string[] }>(`/assets/search?q=${q}&k=${k}`);
    return body.ids;
  }

  /** URL of the server-rendered PNG for canonical view k (0..7). */
  renderUrl(sessionId: string, viewIndex: number, cacheKey?: string | number): string {
    const bust = cacheKey !== undefined ? `&t=${cacheKey}` : "";
    return `${this.baseUrl}/sessions/${sessionId}/render?view=${viewIndex}${bust}`;
  }
}

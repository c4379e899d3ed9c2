import type {
  AskResponse,
  AvatarStartResponse,
  CleanupResponse,
  HealthResponse,
  SegmentFetch,
  VoiceResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public stage?: string,
  ) {
    super(message);
  }
}

async function raiseFor(resp: Response): Promise<never> {
  let message = `${resp.status} ${resp.statusText}`;
  let stage: string | undefined;
  try {
    const body = await resp.json();
    if (typeof body.detail === "string") message = body.detail;
    else if (body.detail) {
      stage = body.detail.stage;
      message = body.detail.error ?? message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, message, stage);
}

/** Thin typed client over the engine's loopback HTTP API. */
export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await raiseFor(resp);
    return resp.json() as Promise<T>;
  }

  ask(
    lectureId: string,
    question: string,
    pauseTime: number,
    config?: { lambda?: number; top_K?: number; top_k?: number },
  ): Promise<AskResponse> {
    return this.postJson("/api/ask", {
      lecture_id: lectureId,
      question,
      pause_time: pauseTime,
      config,
    });
  }

  async voice(wav: Uint8Array, lectureId: string, pauseTime: number): Promise<VoiceResponse> {
    const form = new FormData();
    form.append("audio", new Blob([wav.buffer as ArrayBuffer], { type: "audio/wav" }), "query.wav");
    form.append("lecture_id", lectureId);
    form.append("pause_time", String(pauseTime));
    const resp = await this.fetchFn(`${this.baseUrl}/api/voice`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) await raiseFor(resp);
    return resp.json() as Promise<VoiceResponse>;
  }

  avatarStart(answerText: string, sessionId?: string): Promise<AvatarStartResponse> {
    return this.postJson("/api/avatar", {
      answer_text: answerText,
      session_id: sessionId ?? null,
    });
  }

  /** One poll of the media endpoint; 202 maps to pending, 410 to failed. */
  async fetchSegment(sessionId: string, seq: number): Promise<SegmentFetch> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/avatar/${sessionId}/${seq}`);
    if (resp.status === 202) return { kind: "pending" };
    if (resp.status === 410) return { kind: "failed" };
    if (!resp.ok) await raiseFor(resp);
    const blob = await resp.blob();
    return { kind: "ready", url: URL.createObjectURL(blob) };
  }

  async played(sessionId: string, seq: number): Promise<number[]> {
    const body = await this.postJson<{ requested: number[] }>(
      `/api/avatar/${sessionId}/played`,
      { seq },
    );
    return body.requested;
  }

  cleanup(sessionId: string): Promise<CleanupResponse> {
    return this.postJson("/api/cleanup", { session_id: sessionId });
  }

  /** Best-effort cleanup for page unload: beacon when available, else keepalive. */
  cleanupBeacon(sessionId: string): void {
    const payload = JSON.stringify({ session_id: sessionId });
    if (typeof navigator !== "undefined" && navigator.sendBeacon) {
      navigator.sendBeacon(
        `${this.baseUrl}/api/cleanup`,
        new Blob([payload], { type: "application/json" }),
      );
      return;
    }
    void this.fetchFn(`${this.baseUrl}/api/cleanup`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: payload,
      keepalive: true,
    }).catch(() => undefined);
  }

  async health(): Promise<HealthResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/health`);
    if (!resp.ok) await raiseFor(resp);
    return resp.json() as Promise<HealthResponse>;
  }
}

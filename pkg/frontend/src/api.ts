/** Thin typed client over the backend HTTP API. */

import type {
  BatchPayload,
  DocumentView,
  ExplorePayload,
  HistoryEvent,
  LabelEventBody,
  ProcessSettings,
  ResultsPayload,
  SubmitResult,
  UploadResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

export class ApiClient {
  constructor(
    private base: string = "/api/v1",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError("network_error", String(err), 0);
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `HTTP ${response.status}`;
      try {
        const body = await response.json();
        if (body?.error?.code) {
          code = body.error.code;
          message = body.error.message ?? message;
        }
      } catch {
        // non-JSON error body: keep the generic message
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  async createSession(): Promise<string> {
    const out = await this.post<{ session_id: string }>("/sessions");
    return out.session_id;
  }

  uploadDocument(
    sessionId: string,
    filename: string,
    content: Uint8Array,
  ): Promise<UploadResult> {
    return this.post(`/sessions/${sessionId}/documents`, {
      filename,
      content_base64: bytesToBase64(content),
    });
  }

  process(sessionId: string, settings: ProcessSettings): Promise<{ ok: boolean }> {
    return this.post(`/sessions/${sessionId}/process`, settings);
  }

  search(sessionId: string, query: string): Promise<BatchPayload> {
    return this.post(`/sessions/${sessionId}/search`, { query });
  }

  explore(sessionId: string): Promise<ExplorePayload> {
    return this.post(`/sessions/${sessionId}/explore`);
  }

  submitLabels(sessionId: string, events: LabelEventBody[]): Promise<SubmitResult> {
    return this.post(`/sessions/${sessionId}/labels`, { events });
  }

  getDocuments(sessionId: string): Promise<{ documents: DocumentView[] }> {
    return this.request(`/sessions/${sessionId}/documents`);
  }

  getHistory(sessionId: string): Promise<{ events: HistoryEvent[] }> {
    return this.request(`/sessions/${sessionId}/history`);
  }

  getResults(sessionId: string): Promise<ResultsPayload> {
    return this.request(`/sessions/${sessionId}/results`);
  }

  clear(sessionId: string): Promise<{ ok: boolean }> {
    return this.post(`/sessions/${sessionId}/clear`);
  }

  downloadUrl(sessionId: string, kind: "state-json" | "history-csv" | "summary-txt"): string {
    return `${this.base}/sessions/${sessionId}/download/${kind}`;
  }
}

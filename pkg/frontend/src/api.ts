// Thin typed client over the annotation-service HTTP API. The fetch
// implementation is injectable so tests can run against a scripted server.

import type {
  ExportReply,
  Hand,
  LabelReply,
  NoteContext,
  NoteRow,
  SessionSummary,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  session(): Promise<SessionSummary> {
    return this.request("/api/session");
  }

  notes(status?: string): Promise<NoteRow[]> {
    const qs = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request(`/api/notes${qs}`);
  }

  context(noteId: number): Promise<NoteContext> {
    return this.request(`/api/notes/${noteId}/context`);
  }

  label(
    noteId: number,
    body: {
      hand?: Hand;
      finger?: number;
      override?: boolean;
      unplayable?: boolean;
      annotator?: string;
    },
  ): Promise<LabelReply> {
    return this.request(`/api/notes/${noteId}/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  export(allowPartial = false): Promise<ExportReply> {
    return this.request("/api/export", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ allow_partial: allowPartial }),
    });
  }
}

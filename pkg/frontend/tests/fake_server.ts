// In-memory stand-in for the annotation service, used by the unit tests.
// Implements just enough of the HTTP surface behind a FetchLike.

import type { FetchLike } from "../src/api.js";
import type {
  CandidateChip,
  Hand,
  NoteContext,
  NoteRow,
  Status,
} from "../src/types.js";

export interface FakeNote {
  note_id: number;
  pitch: number;
  onset_s: number;
  status: Status;
  hand: Hand | null;
  finger: number | null;
  candidates: CandidateChip[];
}

export class FakeServer {
  failNextLabel: number | null = null; // HTTP status to fail with, once
  labelCalls = 0;

  constructor(public notes: FakeNote[]) {}

  get pendingCount(): number {
    return this.notes.filter((n) => n.status.startsWith("pending")).length;
  }

  fetch: FetchLike = async (input, init) => {
    const url = new URL(input, "http://fake");
    const path = url.pathname;
    if (path === "/api/notes") {
      let rows = this.notes;
      if (url.searchParams.get("status") === "pending") {
        rows = rows.filter((n) => n.status.startsWith("pending"));
      }
      return json(rows.map(toRow));
    }
    const ctxMatch = path.match(/^\/api\/notes\/(\d+)\/context$/);
    if (ctxMatch) {
      const note = this.notes.find((n) => n.note_id === Number(ctxMatch[1]));
      if (!note) return json({ detail: "unknown note" }, 404);
      return json(toContext(note));
    }
    const labelMatch = path.match(/^\/api\/notes\/(\d+)\/label$/);
    if (labelMatch && init?.method === "POST") {
      this.labelCalls += 1;
      if (this.failNextLabel !== null) {
        const status = this.failNextLabel;
        this.failNextLabel = null;
        return json({ detail: "injected failure" }, status);
      }
      const note = this.notes.find((n) => n.note_id === Number(labelMatch[1]));
      if (!note) return json({ detail: "unknown note" }, 404);
      const body = JSON.parse(String(init.body));
      note.status = "manual";
      note.hand = body.hand;
      note.finger = body.finger;
      return json({
        note_id: note.note_id,
        status: "manual",
        pending: this.pendingCount,
      });
    }
    return json({ detail: `unhandled ${path}` }, 500);
  };
}

function toRow(n: FakeNote): NoteRow {
  return {
    note_id: n.note_id,
    status: n.status,
    pitch: n.pitch,
    onset_s: n.onset_s,
    offset_s: n.onset_s + 0.5,
    hand: n.hand,
    finger: n.finger,
  };
}

function toContext(n: FakeNote): NoteContext {
  return {
    note_id: n.note_id,
    pitch: n.pitch,
    onset_s: n.onset_s,
    offset_s: n.onset_s + 0.5,
    status: n.status,
    max_score: 30,
    candidates: n.candidates,
    key_rects: [[0, 75, 19.7, 125]],
    frames: [],
    neighbors: [],
    ...(n.candidates.length === 0 ? { score_table: {} } : {}),
  };
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

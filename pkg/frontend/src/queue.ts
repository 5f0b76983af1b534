// Pending-note queue: the annotator's position, current selection, and the
// one-at-a-time mutation flow. Advancing is optimistic; a failed POST rolls
// the queue back and surfaces the error inline. All state changes go
// through POST /label; a reload rebuilds everything from the server.

import { ApiClient, ApiError } from "./api.js";
import type { CandidateChip, Hand, NoteContext, NoteRow } from "./types.js";

export interface Selection {
  hand: Hand;
  finger: number | null;
}

export class QueueController {
  queue: NoteRow[] = [];
  index = 0;
  resolvedCount = 0;
  context: NoteContext | null = null;
  selection: Selection = { hand: "R", finger: null };
  error: string | null = null;
  busy = false;
  serverPending = 0;

  constructor(
    private api: ApiClient,
    public annotator = "ui",
  ) {}

  /** Fetch the pending queue and position on its first note. */
  async load(): Promise<void> {
    this.queue = await this.api.notes("pending");
    this.index = 0;
    this.resolvedCount = 0;
    this.serverPending = this.queue.length;
    this.error = null;
    await this.enterCurrent();
  }

  get total(): number {
    return this.queue.length;
  }

  get current(): NoteRow | null {
    return this.index < this.queue.length ? this.queue[this.index] : null;
  }

  get done(): boolean {
    return this.current === null;
  }

  /** Progress indicator, resolved over queued ("0/10"). */
  get progress(): string {
    return `${this.resolvedCount}/${this.total}`;
  }

  private async enterCurrent(): Promise<void> {
    const note = this.current;
    if (note === null) {
      this.context = null;
      return;
    }
    this.context = await this.api.context(note.note_id);
    this.selection = {
      hand: dominantHand(this.context.candidates),
      finger: null,
    };
  }

  selectFinger(finger: number): void {
    if (finger < 1 || finger > 5) return;
    this.selection = { ...this.selection, finger };
  }

  setHand(hand: Hand): void {
    this.selection = { ...this.selection, hand };
  }

  toggleHand(): void {
    this.setHand(this.selection.hand === "L" ? "R" : "L");
  }

  /** Clicking a candidate chip is the same as typing its hand+finger. */
  chooseCandidate(chip: CandidateChip): void {
    this.selection = { hand: chip.hand, finger: chip.finger };
  }

  /** Submit the current selection; on success advance to the next pending
   *  note, on failure stay put and surface the error. */
  async confirm(): Promise<boolean> {
    const note = this.current;
    if (note === null || this.busy) return false;
    const { hand, finger } = this.selection;
    if (finger === null) {
      this.error = "select a finger (1-5) first";
      return false;
    }
    this.busy = true;
    this.error = null;
    try {
      const reply = await this.api.label(note.note_id, {
        hand,
        finger,
        annotator: this.annotator,
      });
      this.serverPending = reply.pending;
      this.resolvedCount += 1;
      this.index += 1;
      await this.enterCurrent();
      return true;
    } catch (err) {
      this.error = err instanceof ApiError ? err.detail : String(err);
      return false;
    } finally {
      this.busy = false;
    }
  }

  /** Leave the note pending and move on. */
  async skip(): Promise<void> {
    if (this.current === null || this.busy) return;
    this.index += 1;
    await this.enterCurrent();
  }
}

/** Hand of the highest-scoring candidate; right hand when there are none. */
export function dominantHand(candidates: CandidateChip[]): Hand {
  let best: CandidateChip | null = null;
  for (const c of candidates) {
    if (best === null || c.score > best.score) best = c;
  }
  return best ? best.hand : "R";
}

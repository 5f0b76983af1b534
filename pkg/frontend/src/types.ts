// Payload shapes of the annotation-service JSON API. The UI renders these
// verbatim; it never invents candidates or does geometry beyond drawing.

export type Hand = "L" | "R";
export type Status = "auto" | "manual" | "pending-none" | "pending-multi";

export interface SessionSummary {
  session_id: string;
  pending: number;
  stats: {
    notes: number;
    auto: number;
    manual: number;
    pending_none: number;
    pending_multi: number;
  };
}

export interface NoteRow {
  note_id: number;
  status: Status;
  pitch: number;
  onset_s: number;
  offset_s: number;
  hand: Hand | null;
  finger: number | null;
}

export interface CandidateChip {
  hand: Hand;
  finger: number;
  score: number;
  strong: boolean;
}

export interface FrameHand {
  side: Hand;
  floating: boolean;
  depth: number | null;
  fingertips: [number, number][];
}

export interface ContextFrame {
  frame: number;
  t_s: number;
  hands: FrameHand[];
}

export interface NeighborNote {
  note_id: number;
  pitch: number;
  onset_s: number;
  status: Status;
  hand: Hand | null;
  finger: number | null;
}

export interface NoteContext {
  note_id: number;
  pitch: number;
  onset_s: number;
  offset_s: number;
  status: Status;
  max_score: number;
  candidates: CandidateChip[];
  key_rects: [number, number, number, number][];
  frames: ContextFrame[];
  neighbors: NeighborNote[];
  score_table?: Record<string, number>;
  frame_images?: string[];
}

export interface LabelReply {
  note_id: number;
  status: Status;
  pending: number;
}

export interface ExportReply {
  files: string[];
  pending: number;
}

"""Annotation sessions: persisted fingering state with an append-only audit
log, serving the human-in-the-loop resolution of ambiguous notes.

State lives in a session directory as `state.json` (atomic snapshot,
write-temp-rename) plus `audit.jsonl` (append-only label history). Human
labels are precious: the audit log alone is sufficient to reconstruct the
final state from a fresh pipeline run.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from . import fingering as fng
from . import geometry as geom
from .depth import load_landmarks
from .fingering import (FingerId, FingeringAnnotation, FingeringConfig,
                        STATUS_AUTO, STATUS_MANUAL, STATUS_PENDING_MULTI,
                        STATUS_PENDING_NONE)
from .midi import parse_midi, split_by_hand, write_midi

STATE_FILE = "state.json"
AUDIT_FILE = "audit.jsonl"


class SessionError(RuntimeError):
    pass


class LabelConflict(SessionError):
    """Attempt to relabel an auto note without the override flag."""


@dataclass
class Bundle:
    midi_path: str
    landmarks_path: str
    geometry_path: str
    frames_dir: str | None = None

    def validate(self):
        for name in ("midi_path", "landmarks_path", "geometry_path"):
            path = getattr(self, name)
            if not os.path.isfile(path):
                raise SessionError(f"missing bundle file: {path}")
        if self.frames_dir and not os.path.isdir(self.frames_dir):
            raise SessionError(f"missing frame-image directory: {self.frames_dir}")


class Session:
    """One recording's annotation state, backed by a session directory."""

    def __init__(self, session_dir, session_id, bundle, performance, annotation):
        self.dir = Path(session_dir)
        self.session_id = session_id
        self.bundle = bundle
        self.performance = performance
        self.annotation = annotation
        self._lock = threading.Lock()
        self._prepared = None  # lazily computed frame evidence for contexts

    # -- construction -------------------------------------------------------

    @classmethod
    def create(cls, bundle: Bundle, session_dir,
               config: FingeringConfig | None = None) -> "Session":
        bundle.validate()
        with open(bundle.midi_path, "rb") as f:
            performance = parse_midi(f.read())
        frames = load_landmarks(bundle.landmarks_path)
        geometry = geom.load_geometry(bundle.geometry_path)
        result = fng.run_pipeline(frames, performance, geometry, config)
        session = cls(session_dir, uuid.uuid4().hex[:12], bundle, performance,
                      result.annotation)
        Path(session_dir).mkdir(parents=True, exist_ok=True)
        (session.dir / AUDIT_FILE).touch()
        session._persist()
        return session

    @classmethod
    def load(cls, session_dir) -> "Session":
        state_path = Path(session_dir) / STATE_FILE
        if not state_path.is_file():
            raise SessionError(f"no session state at {state_path}")
        with open(state_path) as f:
            state = json.load(f)
        bundle = Bundle(**state["bundle"])
        with open(bundle.midi_path, "rb") as f:
            performance = parse_midi(f.read())
        annotation = FingeringAnnotation.from_jsonl(
            "\n".join(json.dumps(e) for e in state["notes"]))
        return cls(session_dir, state["session_id"], bundle, performance, annotation)

    # -- persistence --------------------------------------------------------

    def _persist(self):
        state = {
            "session_id": self.session_id,
            "bundle": {"midi_path": self.bundle.midi_path,
                       "landmarks_path": self.bundle.landmarks_path,
                       "geometry_path": self.bundle.geometry_path,
                       "frames_dir": self.bundle.frames_dir},
            "notes": [json.loads(line) for line in
                      self.annotation.to_jsonl(self.performance.notes).splitlines()],
        }
        tmp = self.dir / (STATE_FILE + ".tmp")
        with open(tmp, "w") as f:
            json.dump(state, f, indent=1)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.dir / STATE_FILE)

    def _audit(self, entry):
        with open(self.dir / AUDIT_FILE, "a") as f:
            f.write(json.dumps(entry) + "\n")

    # -- queries ------------------------------------------------------------

    def summary(self):
        return {"session_id": self.session_id,
                "stats": self.annotation.stats(),
                "pending": len(self.annotation.pending_ids())}

    def notes(self, status=None):
        notes_by_id = {n.note_id: n for n in self.performance.notes}
        out = []
        for e in self.annotation:
            if status == "pending" and e.status not in (STATUS_PENDING_NONE,
                                                        STATUS_PENDING_MULTI):
                continue
            if status not in (None, "pending") and e.status != status:
                continue
            note = notes_by_id[e.note_id]
            out.append({"note_id": e.note_id, "status": e.status,
                        "pitch": note.pitch, "onset_s": note.onset_s,
                        "offset_s": note.offset_s,
                        "hand": e.label.hand if e.label else None,
                        "finger": e.label.finger if e.label else None})
        return out

    def _prepare(self):
        if self._prepared is None:
            frames = load_landmarks(self.bundle.landmarks_path)
            geometry = geom.load_geometry(self.bundle.geometry_path)
            if frames:
                prepared, _ = fng.prepare_frames(frames, geometry)
            else:
                prepared = []
            self._prepared = sorted(prepared, key=lambda fr: fr.t_s)
        return self._prepared

    def note_context(self, note_id):
        """Everything the annotator needs: candidates, per-frame fingertip
        positions in keyboard space, the target key region, neighbor notes,
        and frame-image URLs when available."""
        entry = self.annotation.entries.get(note_id)
        if entry is None:
            raise KeyError(note_id)
        notes_by_id = {n.note_id: n for n in self.performance.notes}
        note = notes_by_id[note_id]
        layout = geom.KeyLayout()
        frames = [fr for fr in self._prepare()
                  if note.onset_s <= fr.t_s < note.offset_s]
        frame_payload = []
        for fr in frames:
            frame_payload.append({
                "frame": fr.frame_idx, "t_s": fr.t_s,
                "hands": [{"side": h.side, "floating": h.floating,
                           "depth": h.depth,
                           "fingertips": [list(map(float, p)) for p in h.fingertips]}
                          for h in fr.hands]})
        ordered = sorted(self.annotation, key=lambda e: e.note_id)
        idx = next(i for i, e in enumerate(ordered) if e.note_id == note_id)
        neighbors = []
        for e in ordered[max(0, idx - 2):idx + 3]:
            if e.note_id == note_id:
                continue
            n = notes_by_id[e.note_id]
            neighbors.append({"note_id": e.note_id, "pitch": n.pitch,
                              "onset_s": n.onset_s, "status": e.status,
                              "hand": e.label.hand if e.label else None,
                              "finger": e.label.finger if e.label else None})
        payload = {
            "note_id": note_id, "pitch": note.pitch,
            "onset_s": note.onset_s, "offset_s": note.offset_s,
            "status": entry.status, "max_score": entry.max_score,
            "candidates": [{"hand": c.finger.hand, "finger": c.finger.finger,
                            "score": c.score, "strong": c.strong}
                           for c in entry.candidates],
            "key_rects": [list(r) for r in layout._rects[note.pitch]],
            "frames": frame_payload,
            "neighbors": neighbors,
        }
        if not entry.candidates:
            payload["score_table"] = entry.scores
        if self.bundle.frames_dir:
            payload["frame_images"] = [f"/frames/{fr['frame']}.png"
                                       for fr in frame_payload]
        return payload

    # -- mutations ----------------------------------------------------------

    def submit_label(self, note_id, hand=None, finger=None, annotator="anonymous",
                     override=False, unplayable=False):
        """Record a human label (or mark the note unplayable). Auto labels
        require override=True; every change is audited and persisted."""
        with self._lock:
            entry = self.annotation.entries.get(note_id)
            if entry is None:
                raise KeyError(note_id)
            if entry.status == STATUS_AUTO and not override:
                raise LabelConflict(
                    f"note {note_id} is auto-labeled; pass override to relabel")
            if unplayable:
                label = None
            else:
                if hand not in ("L", "R") or finger not in (1, 2, 3, 4, 5):
                    raise ValueError(f"invalid label hand={hand} finger={finger}")
                label = FingerId(hand, finger)
            entry.status = STATUS_MANUAL
            entry.label = label
            self._audit({"note_id": note_id,
                         "hand": hand, "finger": finger,
                         "unplayable": unplayable, "override": override,
                         "annotator": annotator, "timestamp": time.time()})
            self._persist()
            return {"note_id": note_id, "status": entry.status,
                    "pending": len(self.annotation.pending_ids())}

    # -- export -------------------------------------------------------------

    def export(self, allow_partial=False):
        """Write fingering JSONL + CSV and per-hand MIDI files into the
        session directory. Refuses while notes are pending unless
        allow_partial."""
        with self._lock:
            pending = self.annotation.pending_ids()
            if pending and not allow_partial:
                raise SessionError(
                    f"{len(pending)} notes still pending; use allow_partial to export anyway")
            jsonl = self.annotation.to_jsonl(self.performance.notes)
            csv_text = self.annotation.to_csv(self.performance.notes)
            (self.dir / "fingering.jsonl").write_text(jsonl)
            (self.dir / "fingering.csv").write_text(csv_text)
            hand_of = self.annotation.hand_assignments()
            labeled = [n for n in self.performance.notes if n.note_id in hand_of]
            partial = type(self.performance)(
                notes=labeled, pedals=list(self.performance.pedals),
                ticks_per_quarter=self.performance.ticks_per_quarter,
                tempo_map=list(self.performance.tempo_map))
            left, right = split_by_hand(partial, hand_of)
            (self.dir / "left.mid").write_bytes(write_midi(left))
            (self.dir / "right.mid").write_bytes(write_midi(right))
            return {"files": ["fingering.jsonl", "fingering.csv",
                              "left.mid", "right.mid"],
                    "pending": len(pending)}

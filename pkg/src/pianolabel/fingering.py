"""Fingering scoring and candidate extraction.

For every MIDI note, each finger of each non-floating hand accumulates a
score over the video frames covering the note: 1 per frame when the
fingertip lies inside the note's key region, linearly less when it is
slightly off. Fingers above 50% / 80% of the note's frame count become
normal / strong candidates; notes with a single candidate are labeled
automatically, the rest are queued for a human annotator.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import depth as depth_mod
from . import geometry as geom
from .depth import FINGERTIPS, FLOATING_THRESHOLD, CalibrationError
from .midi import NoteEvent, Performance

log = logging.getLogger(__name__)

STATUS_AUTO = "auto"
STATUS_MANUAL = "manual"
STATUS_PENDING_NONE = "pending-none"
STATUS_PENDING_MULTI = "pending-multi"

HANDS = ("L", "R")
FINGERS = (1, 2, 3, 4, 5)


@dataclass(frozen=True, order=True)
class FingerId:
    hand: str   # 'L' or 'R'
    finger: int  # 1=thumb .. 5=little

    def __post_init__(self):
        if self.hand not in HANDS or self.finger not in FINGERS:
            raise ValueError(f"invalid finger id {self.hand}{self.finger}")

    def __str__(self):
        return f"{self.hand}{self.finger}"


ALL_FINGERS = tuple(FingerId(h, f) for h in HANDS for f in FINGERS)


@dataclass
class FingeringScoreTable:
    note_id: int
    max_score: float               # covering frame count
    scores: dict = field(default_factory=dict)  # FingerId -> float

    def add(self, finger: FingerId, weight: float):
        self.scores[finger] = self.scores.get(finger, 0.0) + weight


@dataclass(frozen=True)
class Candidate:
    finger: FingerId
    score: float
    strong: bool


@dataclass
class NoteAnnotation:
    note_id: int
    status: str
    label: FingerId | None
    candidates: list
    max_score: float
    scores: dict = field(default_factory=dict)

    @property
    def hand(self):
        return self.label.hand if self.label else None


@dataclass
class FingeringConfig:
    floating_threshold: float = FLOATING_THRESHOLD
    normal_fraction: float = 0.5
    strong_fraction: float = 0.8
    weight_falloff: float = 0.5     # white-key widths over which the weight decays to 0
    neutral_angle_deg: float = depth_mod.NEUTRAL_ANGLE_DEG
    min_calibration_frames: int = 20
    hand_score_min: float = 0.5
    swap_check_fraction: float = 0.8


class FingeringAnnotation:
    """Per-note annotation state for one recording."""

    def __init__(self, entries=None):
        self.entries: dict[int, NoteAnnotation] = dict(entries or {})

    def __getitem__(self, note_id):
        return self.entries[note_id]

    def __iter__(self):
        return iter(sorted(self.entries.values(), key=lambda e: e.note_id))

    def __len__(self):
        return len(self.entries)

    def hand_assignments(self):
        return {e.note_id: e.label.hand for e in self.entries.values() if e.label}

    def pending_ids(self):
        return [e.note_id for e in self
                if e.status in (STATUS_PENDING_NONE, STATUS_PENDING_MULTI)]

    def stats(self):
        n = max(len(self.entries), 1)
        count = lambda s: sum(1 for e in self.entries.values() if e.status == s)
        return {
            "notes": len(self.entries),
            "auto": count(STATUS_AUTO) / n,
            "manual": count(STATUS_MANUAL) / n,
            "pending_none": count(STATUS_PENDING_NONE) / n,
            "pending_multi": count(STATUS_PENDING_MULTI) / n,
        }

    def to_jsonl(self, notes=None):
        by_id = {n.note_id: n for n in notes} if notes else {}
        lines = []
        for e in self:
            note = by_id.get(e.note_id)
            obj = {
                "note_id": e.note_id,
                "onset_s": note.onset_s if note else None,
                "pitch": note.pitch if note else None,
                "status": e.status,
                "hand": e.label.hand if e.label else None,
                "finger": e.label.finger if e.label else None,
                "candidates": [{"hand": c.finger.hand, "finger": c.finger.finger,
                                "score": c.score, "strong": c.strong}
                               for c in e.candidates],
                "max_score": e.max_score,
            }
            lines.append(json.dumps(obj))
        return "\n".join(lines) + ("\n" if lines else "")

    def to_csv(self, notes=None):
        by_id = {n.note_id: n for n in notes} if notes else {}
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["note_id", "onset_s", "pitch", "status", "hand", "finger",
                         "candidates", "max_score"])
        for e in self:
            note = by_id.get(e.note_id)
            cands = ";".join(f"{c.finger}:{c.score:g}{'*' if c.strong else ''}"
                             for c in e.candidates)
            writer.writerow([e.note_id,
                             note.onset_s if note else "",
                             note.pitch if note else "",
                             e.status,
                             e.label.hand if e.label else "",
                             e.label.finger if e.label else "",
                             cands, e.max_score])
        return buf.getvalue()

    @classmethod
    def from_jsonl(cls, text):
        entries = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            label = (FingerId(obj["hand"], obj["finger"])
                     if obj.get("hand") and obj.get("finger") else None)
            cands = [Candidate(FingerId(c["hand"], c["finger"]), c["score"], c["strong"])
                     for c in obj.get("candidates", [])]
            entries[obj["note_id"]] = NoteAnnotation(
                obj["note_id"], obj["status"], label, cands, obj.get("max_score", 0.0))
        return cls(entries)


# ---------------------------------------------------------------------------
# scoring primitives


def fingertip_weight(pt, pitch, layout: geom.KeyLayout, falloff=0.5):
    """1 inside the key region, linear falloff to 0 over `falloff` white-key
    widths outside it."""
    dist = layout.distance_to_key(pt, pitch)
    return max(0.0, 1.0 - dist / falloff)


@dataclass(frozen=True)
class FrameHandState:
    """Per-frame, per-hand evidence: fingertip keyboard coords and floating flag."""
    side: str
    fingertips: np.ndarray  # 5 x 2 keyboard-space points (thumb..little)
    floating: bool
    depth: float | None


@dataclass(frozen=True)
class PreparedFrame:
    frame_idx: int
    t_s: float
    hands: tuple  # FrameHandState entries


def fingering_scores(note: NoteEvent, frames, layout: geom.KeyLayout,
                     falloff=0.5) -> FingeringScoreTable:
    """Accumulate per-finger scores over the PreparedFrames whose midpoint
    timestamp lies in [onset, offset). Floating hands contribute nothing."""
    covering = [fr for fr in frames if note.onset_s <= fr.t_s < note.offset_s]
    table = FingeringScoreTable(note.note_id, max_score=float(len(covering)))
    for fr in covering:
        for hand in fr.hands:
            if hand.floating:
                continue
            for k, finger in enumerate(FINGERS):
                w = fingertip_weight(hand.fingertips[k], note.pitch, layout, falloff)
                if w > 0:
                    table.add(FingerId(hand.side, finger), w)
    return table


def extract_candidates(table: FingeringScoreTable, normal_fraction=0.5,
                       strong_fraction=0.8) -> list:
    """Fingers scoring above the normal / strong fractions of the maximum.
    A lone strong candidate collapses the list to itself."""
    if table.max_score <= 0:
        return []
    cands = []
    for finger in ALL_FINGERS:
        score = table.scores.get(finger, 0.0)
        if score > normal_fraction * table.max_score:
            strong = score > strong_fraction * table.max_score
            cands.append(Candidate(finger, score, strong))
    strongs = [c for c in cands if c.strong]
    if len(strongs) == 1:
        return strongs
    return cands


def auto_label(note_id, candidates, max_score, scores=None) -> NoteAnnotation:
    """One candidate -> auto label; zero -> pending-none; several -> pending-multi."""
    scores = scores or {}
    if len(candidates) == 1:
        return NoteAnnotation(note_id, STATUS_AUTO, candidates[0].finger,
                              list(candidates), max_score, scores)
    status = STATUS_PENDING_NONE if not candidates else STATUS_PENDING_MULTI
    return NoteAnnotation(note_id, status, None, list(candidates), max_score, scores)


# ---------------------------------------------------------------------------
# frame preparation


def _maybe_swap_sides(frames, swap_fraction):
    """Swap L/R labels when the wrists' x-order contradicts the labels in
    more than `swap_fraction` of the both-hand frames."""
    both, contradict = 0, 0
    for fr in frames:
        sides = {h.side: h for h in fr.hands}
        if "L" in sides and "R" in sides:
            both += 1
            if sides["L"].landmarks[depth_mod.WRIST][0] > sides["R"].landmarks[depth_mod.WRIST][0]:
                contradict += 1
    if both and contradict / both > swap_fraction:
        log.warning("hand labels contradict wrist order in %d/%d frames; swapping sides",
                    contradict, both)
        swapped = []
        for fr in frames:
            hands = tuple(depth_mod.Hand("L" if h.side == "R" else "R", h.score, h.landmarks)
                          for h in fr.hands)
            swapped.append(depth_mod.LandmarkFrame(fr.frame_idx, fr.t_s, hands))
        return swapped
    return frames


def prepare_frames(frames, geometry: geom.KeyboardGeometry,
                   config: FingeringConfig | None = None):
    """Calibrate model skeletons, solve per-frame depths, and transform
    fingertips to keyboard space. Returns (prepared frames, skeletons dict)."""
    config = config or FingeringConfig()
    ar = geometry.image_h / geometry.image_w
    frames = _maybe_swap_sides(frames, config.swap_check_fraction)
    homography = geom.compute_homography(geometry)

    by_side = {"L": [], "R": []}
    for fr in frames:
        for hand in fr.hands:
            if hand.score >= config.hand_score_min and hand.side in by_side:
                by_side[hand.side].append(hand)

    skeletons = {}
    for side, hands in by_side.items():
        if not hands:
            continue
        skeletons[side] = depth_mod.select_model_skeleton(
            hands, ar, side=side, min_frames=config.min_calibration_frames,
            neutral_angle=config.neutral_angle_deg)

    prepared = []
    unknown_depth = 0
    for fr in frames:
        states = []
        for hand in fr.hands:
            if hand.score < config.hand_score_min or hand.side not in skeletons:
                continue
            result = depth_mod.solve_hand_depth(hand, ar, skeletons[hand.side])
            if result is None:
                # depth-unknown counts as non-floating: failing closed only
                # risks adding weight, failing open would delete evidence
                unknown_depth += 1
                floating, d = False, None
            else:
                floating = result.floating(config.floating_threshold)
                d = result.d
            tips = np.empty((5, 2))
            for k, idx in enumerate(FINGERTIPS):
                px = (hand.landmarks[idx][0] * geometry.image_w,
                      hand.landmarks[idx][1] * geometry.image_h)
                und = geom.undistort(px, geometry.distortion, geometry.image_w,
                                     geometry.image_h)
                (kx, ky), _ = geom.to_keyboard_space(homography, und)
                tips[k] = (kx, ky)
            states.append(FrameHandState(hand.side, tips, floating, d))
        prepared.append(PreparedFrame(fr.frame_idx, fr.t_s, tuple(states)))
    if unknown_depth:
        log.warning("%d hand frames had no depth solution (treated as non-floating)",
                    unknown_depth)
    return prepared, skeletons


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class PipelineResult:
    annotation: FingeringAnnotation
    hand_of: dict
    stats: dict
    skeletons: dict


def run_pipeline(frames, performance: Performance, geometry: geom.KeyboardGeometry,
                 config: FingeringConfig | None = None) -> PipelineResult:
    """Calibration -> per-frame depth -> per-note scoring -> candidates -> labels."""
    config = config or FingeringConfig()
    layout = geom.KeyLayout()
    if frames:
        prepared, skeletons = prepare_frames(frames, geometry, config)
    else:
        prepared, skeletons = [], {}
    prepared.sort(key=lambda fr: fr.t_s)
    times = [fr.t_s for fr in prepared]

    annotation = FingeringAnnotation()
    for note in performance.notes:
        lo = bisect.bisect_left(times, note.onset_s)
        hi = bisect.bisect_left(times, note.offset_s)
        table = fingering_scores(note, prepared[lo:hi], layout, config.weight_falloff)
        cands = extract_candidates(table, config.normal_fraction, config.strong_fraction)
        entry = auto_label(note.note_id, cands, table.max_score,
                           {str(f): s for f, s in table.scores.items()})
        annotation.entries[note.note_id] = entry

    result = PipelineResult(annotation, annotation.hand_assignments(),
                            annotation.stats(), skeletons)
    log.info("fingering pipeline: %s", result.stats)
    return result

"""Audio-visual onset filtering: discard transcribed notes whose pitch is
physically implausible given fingertip positions in the nearest video frame.

For each onset the nearest frame (midpoint timestamps) is looked up; every
detected fingertip votes for the white keys within +-2 of the key under it
(plus the black keys in between), and the note survives iff its pitch lies
in the combined candidate set. Frames with no detected hand leave the note
untouched.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import geometry as geom
from .depth import FINGERTIPS, LandmarkFrame
from .midi import Performance


@dataclass
class FilterConfig:
    candidate_range: int = 2
    set_combine: str = "union"          # "union" or "intersection"
    fps: float = 60.0
    missing_hand_policy: str = "filter-with-available"  # or "keep"
    hand_score_min: float = 0.5

    def __post_init__(self):
        if self.candidate_range < 0:
            raise ValueError("candidate_range must be >= 0")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.set_combine not in ("union", "intersection"):
            raise ValueError("set_combine must be 'union' or 'intersection'")
        if self.missing_hand_policy not in ("keep", "filter-with-available"):
            raise ValueError("bad missing_hand_policy")


@dataclass
class FilterDecision:
    note_id: int
    frame: int | None
    decision: str            # "kept" or "discarded"
    reason: str
    n_candidates: int

    def to_json(self):
        return json.dumps({"note_id": self.note_id, "frame": self.frame,
                           "decision": self.decision, "reason": self.reason,
                           "candidates": self.n_candidates})


@dataclass
class FilterLog:
    decisions: list = field(default_factory=list)

    def to_jsonl(self):
        return "\n".join(d.to_json() for d in self.decisions) + \
            ("\n" if self.decisions else "")


def frame_for_onset(onset_s, fps, n_frames):
    """Index of the frame whose midpoint timestamp (i + 0.5) / fps is nearest
    to the onset; ties resolve to the lower index; clamped to the video."""
    if n_frames <= 0:
        raise ValueError("n_frames must be positive")
    # midpoint of frame i is at (i + 0.5) / fps
    pos = onset_s * fps - 0.5
    lo = math.floor(pos)
    i = lo if (pos - lo) <= (lo + 1 - pos) else lo + 1
    return max(0, min(i, n_frames - 1))


def plausible_pitches(hands, geometry: geom.KeyboardGeometry,
                      homography: geom.Homography, layout: geom.KeyLayout,
                      config: FilterConfig):
    """Combined candidate pitch set over all detected fingertips."""
    per_tip = []
    for hand in hands:
        for idx in FINGERTIPS:
            px = (hand.landmarks[idx][0] * geometry.image_w,
                  hand.landmarks[idx][1] * geometry.image_h)
            und = geom.undistort(px, geometry.distortion, geometry.image_w,
                                 geometry.image_h)
            (kx, _), _ = geom.to_keyboard_space(homography, und)
            wi = layout.white_index_of(kx)
            per_tip.append(layout.candidate_pitches(wi, config.candidate_range))
    if not per_tip:
        return set()
    if config.set_combine == "union":
        return set().union(*per_tip)
    return set.intersection(*per_tip)


def filter_performance(p: Performance, frames, geometry: geom.KeyboardGeometry,
                       config: FilterConfig | None = None):
    """Apply the onset filter. Returns (filtered Performance, FilterLog).
    The output note set is always a subset of the input; pedal events and
    all other data pass through unchanged."""
    config = config or FilterConfig()
    layout = geom.KeyLayout()
    homography = geom.compute_homography(geometry)
    frames = sorted(frames, key=lambda fr: fr.frame_idx)
    by_index = {fr.frame_idx: fr for fr in frames}
    n_frames = (max(by_index) + 1) if by_index else 0

    log = FilterLog()
    kept = []
    for note in p.notes:
        if n_frames == 0:
            kept.append(note)
            log.decisions.append(FilterDecision(
                note.note_id, None, "kept", "no landmark coverage", 0))
            continue
        fi = frame_for_onset(note.onset_s, config.fps, n_frames)
        frame = by_index.get(fi)
        hands = [h for h in (frame.hands if frame else ())
                 if h.score >= config.hand_score_min]
        if not hands:
            kept.append(note)
            log.decisions.append(FilterDecision(
                note.note_id, fi, "kept", "no hand detected", 0))
            continue
        if len(hands) < 2 and config.missing_hand_policy == "keep":
            kept.append(note)
            log.decisions.append(FilterDecision(
                note.note_id, fi, "kept", "single hand, keep policy", 0))
            continue
        candidates = plausible_pitches(hands, geometry, homography, layout, config)
        if note.pitch in candidates:
            kept.append(note)
            log.decisions.append(FilterDecision(
                note.note_id, fi, "kept", "pitch plausible", len(candidates)))
        else:
            log.decisions.append(FilterDecision(
                note.note_id, fi, "discarded", "pitch implausible", len(candidates)))
    filtered = Performance(notes=kept, pedals=list(p.pedals),
                           ticks_per_quarter=p.ticks_per_quarter,
                           tempo_map=list(p.tempo_map))
    return filtered, log

"""Shared synthetic-scene builders for the demo scripts.

The scripted camera is 1280x720 with the keybed filling a 1024x125 px
axis-aligned rectangle, so keyboard-space coordinates map to pixels by a
pure translation, and a hand lifted toward the camera is simulated by
scaling its landmarks about the image center.
"""

import numpy as np

from pianolabel.depth import Hand, LandmarkFrame
from pianolabel.geometry import DistortionCoeffs, KeyboardGeometry, WHITE_PITCHES, WHITE_W
from pianolabel.midi import NoteEvent, Performance

IMAGE_W, IMAGE_H = 1280, 720
KB_ORIGIN = (128.0, 160.0)
FPS = 60.0

GEOMETRY = KeyboardGeometry(
    corners=((128.0, 160.0), (1152.0, 160.0), (1152.0, 285.0), (128.0, 285.0)),
    distortion=DistortionCoeffs(),
    image_w=IMAGE_W, image_h=IMAGE_H)


def make_hand(side, tips_kb, score=1.0, depth=1.0):
    """21-landmark hand with its five fingertips at the given keyboard-space
    points and a neutral wrist/MCP triangle; depth < 1 lifts it toward the
    camera."""
    tips_px = np.array([(x + KB_ORIGIN[0], y + KB_ORIGIN[1]) for x, y in tips_kb])
    wrist = tips_px.mean(axis=0) + (0.0, 85.0)
    lm = np.zeros((21, 2))
    lm[0] = wrist
    lm[5] = wrist + (-20.0, -80.0)
    lm[13] = wrist + (20.0, -80.0)
    lm[9] = wrist + (0.0, -80.0)
    lm[17] = wrist + (40.0, -78.0)
    lm[1] = wrist + (-30.0, -30.0)
    for finger, tip_idx in enumerate((4, 8, 12, 16, 20)):
        mcp = lm[(1, 5, 9, 13, 17)[finger]]
        lm[tip_idx] = tips_px[finger]
        lm[tip_idx - 1] = mcp + 0.67 * (tips_px[finger] - mcp)
        lm[tip_idx - 2] = mcp + 0.33 * (tips_px[finger] - mcp)
        if tip_idx != 4:
            lm[tip_idx - 3] = mcp
    if depth != 1.0:
        center = np.array([IMAGE_W / 2.0, IMAGE_H / 2.0])
        lm = center + (lm - center) / depth
    return Hand(side, score, lm / (IMAGE_W, IMAGE_H))


def hand_on_key(note, finger, depth=1.0):
    """Right hand resting one white key per finger, with `finger` on the
    note's key."""
    wi = WHITE_PITCHES.index(note.pitch)
    base_x = (wi + 0.5 - (finger - 1)) * WHITE_W
    tips = [(base_x + k * WHITE_W, 100.0) for k in range(5)]
    return make_hand("R", tips, depth=depth)


def two_finger_hover(note, side="R", y=100.0):
    """Hand with fingers 2 and 3 both inside the note's white key:
    deliberately ambiguous fingering evidence."""
    wi = WHITE_PITCHES.index(note.pitch)
    tips = [((wi - 0.5) * WHITE_W, y), ((wi + 0.35) * WHITE_W, y),
            ((wi + 0.65) * WHITE_W, y), ((wi + 1.5) * WHITE_W, y),
            ((wi + 2.5) * WHITE_W, y)]
    return make_hand(side, tips)


def make_frames(hand_script, n_frames, fps=FPS):
    """hand_script: frame index -> list of Hand; timestamps at frame-interval
    midpoints."""
    return [LandmarkFrame(i, (i + 0.5) / fps, tuple(hand_script(i) or []))
            for i in range(n_frames)]


def white_key_scale(base_index=23, n=10, dur=0.5):
    """One note per white key, ascending from `base_index` (23 = C4)."""
    notes = [NoteEvent(i, i * dur, (i + 1) * dur, WHITE_PITCHES[base_index + i], 64)
             for i in range(n)]
    return Performance(notes=notes)


def covering_note(perf, t):
    return next((n for n in perf.notes if n.onset_s <= t < n.offset_s), None)

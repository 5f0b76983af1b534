"""Automatic fingering on a scripted C-major scale.

A synthetic right hand walks up ten white keys at 60 fps, one finger per
key. One extra note is played while two fingers alternate over its key
(ambiguous), and two notes sound with no hand in view (no evidence). The
pipeline auto-labels the unambiguous notes and queues the rest for a human.
"""

from pianolabel.fingering import run_pipeline
from pianolabel.geometry import WHITE_PITCHES
from pianolabel.midi import NoteEvent

from common import (FPS, GEOMETRY, covering_note, hand_on_key, make_frames,
                    two_finger_hover, white_key_scale)


def main():
    perf = white_key_scale(n=13)
    scale_ids = list(range(10))
    multi_id, none_ids = 10, (11, 12)
    finger_of = {i: (i % 5) + 1 for i in scale_ids}

    def script(i):
        note = covering_note(perf, (i + 0.5) / FPS)
        if note is None or note.note_id in none_ids:
            return []
        if note.note_id == multi_id:
            return [two_finger_hover(note)]
        return [hand_on_key(note, finger_of[note.note_id])]

    frames = make_frames(script, n_frames=int(6.5 * FPS))
    result = run_pipeline(frames, perf, GEOMETRY)

    print("note  pitch  status         label   candidates")
    for note in perf.notes:
        e = result.annotation[note.note_id]
        label = f"{e.label.hand}{e.label.finger}" if e.label else "-"
        cands = " ".join(f"{c.finger.hand}{c.finger.finger}:{c.score:.0f}"
                         for c in e.candidates)
        print(f"{note.note_id:4d}  {note.pitch:5d}  {e.status:13s}  {label:6s}  {cands}")
    print("\nfractions:", {k: round(v, 3) for k, v in result.stats.items()})


if __name__ == "__main__":
    main()

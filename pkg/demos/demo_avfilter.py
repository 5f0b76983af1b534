"""Audio-visual onset filtering.

A transcription with injected false positives is checked against hand
landmarks: a note whose onset frame shows no fingertip within two white
keys of its key is discarded. Notes under the hand survive; octave-error
ghosts far from any fingertip do not.
"""

from pianolabel.avfilter import filter_performance
from pianolabel.geometry import WHITE_PITCHES, WHITE_W
from pianolabel.midi import NoteEvent, Performance

from common import FPS, GEOMETRY, make_frames, make_hand


def main():
    covered = [20, 21, 22, 23, 24]  # white-key indices under the fingertips
    hand = make_hand("R", [((wi + 0.5) * WHITE_W, 100.0) for wi in covered])
    frames = make_frames(lambda i: [hand], n_frames=120)

    onset = 0.5 / FPS
    true_notes = [NoteEvent(i, onset, onset + 0.3, WHITE_PITCHES[wi], 64)
                  for i, wi in enumerate(covered)]
    # octave-error ghosts: same pitch classes three octaves away
    ghosts = [NoteEvent(100 + i, onset, onset + 0.3, n.pitch - 36, 64)
              for i, n in enumerate(true_notes)]
    perf = Performance(notes=sorted(true_notes + ghosts,
                                    key=lambda n: (n.onset_s, n.pitch)))

    out, log = filter_performance(perf, frames, GEOMETRY)
    print(f"input {len(perf.notes)} notes -> kept {len(out.notes)}\n")
    for d in log.decisions:
        print(f"note {d.note_id:3d}  frame {d.frame}  {d.decision:9s}  {d.reason}")


if __name__ == "__main__":
    main()

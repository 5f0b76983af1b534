"""Throwaway annotation session for UI integration tests.

Builds a 10-note bundle whose landmarks contain no hands, so every note
comes out pending and must be resolved through the API, then serves it.
Prints one JSON line with the session directory before binding the port.
"""

import argparse
import json
import sys
from pathlib import Path

from pianolabel.depth import save_landmarks
from pianolabel.geometry import WHITE_PITCHES
from pianolabel.midi import NoteEvent, Performance, write_midi
from pianolabel.server import serve
from pianolabel.session import Bundle, Session


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--dir", required=True)
    parser.add_argument("--ui-dir", default=None)
    args = parser.parse_args()

    root = Path(args.dir)
    root.mkdir(parents=True, exist_ok=True)
    perf = Performance(notes=[
        NoteEvent(i, 0.5 * i, 0.5 * (i + 1), WHITE_PITCHES[23 + i], 64)
        for i in range(10)])
    (root / "perf.mid").write_bytes(write_midi(perf))
    save_landmarks([], root / "landmarks.jsonl")
    (root / "geometry.json").write_text(json.dumps({
        "corners": [[128, 160], [1152, 160], [1152, 285], [128, 285]],
        "distortion": {"k1": 0.0, "k2": 0.0, "p1": 0.0, "p2": 0.0},
        "image_size": [1280, 720]}))

    bundle = Bundle(str(root / "perf.mid"), str(root / "landmarks.jsonl"),
                    str(root / "geometry.json"))
    session = Session.create(bundle, root / "session")
    print(json.dumps({"session_dir": str(root / "session")}), flush=True)
    serve(session, port=args.port, ui_dir=args.ui_dir)


if __name__ == "__main__":
    sys.exit(main())

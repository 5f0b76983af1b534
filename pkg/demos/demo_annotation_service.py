"""Human-in-the-loop annotation session, driven through the HTTP API.

Builds a bundle (MIDI + landmarks + keyboard geometry) in a temp directory,
starts a session whose pipeline leaves a few notes pending, resolves them
through the same HTTP endpoints the browser UI uses, and exports the
finished fingering with per-hand MIDI.

To serve the same session for a real browser:
    pianolabel fingering serve --session-dir <dir> --midi ... \
        --landmarks ... --geometry ...
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from pianolabel.depth import save_landmarks
from pianolabel.geometry import WHITE_PITCHES
from pianolabel.midi import write_midi
from pianolabel.server import create_app
from pianolabel.session import Bundle, Session

from common import (FPS, GEOMETRY, covering_note, hand_on_key, make_frames,
                    two_finger_hover, white_key_scale)


def build_bundle(root):
    perf = white_key_scale(n=10)
    multi_id, none_ids = 7, (8, 9)

    def script(i):
        note = covering_note(perf, (i + 0.5) / FPS)
        if note is None or note.note_id in none_ids:
            return []
        if note.note_id == multi_id:
            return [two_finger_hover(note)]
        return [hand_on_key(note, (note.note_id % 5) + 1)]

    (root / "perf.mid").write_bytes(write_midi(perf))
    save_landmarks(make_frames(script, n_frames=int(5.0 * FPS)),
                   root / "landmarks.jsonl")
    (root / "geometry.json").write_text(json.dumps({
        "corners": [list(c) for c in GEOMETRY.corners],
        "distortion": {"k1": 0.0, "k2": 0.0, "p1": 0.0, "p2": 0.0},
        "image_size": [GEOMETRY.image_w, GEOMETRY.image_h]}))
    return Bundle(str(root / "perf.mid"), str(root / "landmarks.jsonl"),
                  str(root / "geometry.json"))


def main():
    root = Path(tempfile.mkdtemp(prefix="pianolabel_demo_"))
    session = Session.create(build_bundle(root), root / "session")
    client = TestClient(create_app(session))

    print("session:", client.get("/api/session").json())
    pending = client.get("/api/notes", params={"status": "pending"}).json()
    print(f"\n{len(pending)} pending notes")

    for note in pending:
        ctx = client.get(f"/api/notes/{note['note_id']}/context").json()
        if ctx["candidates"]:
            # take the top candidate, as an annotator clicking a chip would
            best = max(ctx["candidates"], key=lambda c: c["score"])
            body = {"hand": best["hand"], "finger": best["finger"]}
        else:
            body = {"hand": "R", "finger": 1}  # manual judgment call
        reply = client.post(f"/api/notes/{note['note_id']}/label", json=body).json()
        print(f"labeled note {note['note_id']} -> {body}, "
              f"{reply['pending']} left")

    result = client.post("/api/export", json={}).json()
    print("\nexported:", result["files"])
    print("session dir:", root / "session")


if __name__ == "__main__":
    main()

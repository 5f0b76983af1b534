"""Local HTTP API over an annotation session (JSON bodies, localhost by
default). One UI client plus scripted clients; mutations are serialized by
the session's writer lock."""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .session import LabelConflict, Session, SessionError


class LabelBody(BaseModel):
    hand: str | None = None
    finger: int | None = Field(default=None, ge=1, le=5)
    override: bool = False
    unplayable: bool = False
    annotator: str = "anonymous"


class ExportBody(BaseModel):
    allow_partial: bool = False


def create_app(session: Session, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="pianolabel annotation service")

    @app.get("/api/session")
    def get_session():
        return session.summary()

    @app.get("/api/notes")
    def get_notes(status: str | None = None):
        return session.notes(status=status)

    @app.get("/api/notes/{note_id}/context")
    def get_context(note_id: int):
        try:
            return session.note_context(note_id)
        except KeyError:
            raise HTTPException(404, f"unknown note_id {note_id}")

    @app.post("/api/notes/{note_id}/label")
    def post_label(note_id: int, body: LabelBody):
        try:
            return session.submit_label(note_id, hand=body.hand, finger=body.finger,
                                        annotator=body.annotator,
                                        override=body.override,
                                        unplayable=body.unplayable)
        except KeyError:
            raise HTTPException(404, f"unknown note_id {note_id}")
        except LabelConflict as e:
            raise HTTPException(409, str(e))
        except ValueError as e:
            raise HTTPException(422, str(e))

    @app.post("/api/export")
    def post_export(body: ExportBody):
        try:
            return session.export(allow_partial=body.allow_partial)
        except SessionError as e:
            raise HTTPException(409, str(e))

    if session.bundle.frames_dir:
        frames_dir = session.bundle.frames_dir

        @app.get("/frames/{idx}.png")
        def get_frame(idx: int):
            path = os.path.join(frames_dir, f"{idx}.png")
            if not os.path.isfile(path):
                raise HTTPException(404, f"no frame image {idx}")
            return FileResponse(path, media_type="image/png")

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(session: Session, host="127.0.0.1", port=8420, ui_dir=None):
    import uvicorn
    uvicorn.run(create_app(session, ui_dir=ui_dir), host=host, port=port)

"""HTTP surface for the session loop.

JSON bodies, UTF-8; errors come back as ``{"code", "message"}``. One app
serves one schema/lexicon/catalog triple; an optional static directory
hosts the chat UI bundle.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .session import SessionManager, UnknownSession, UtteranceTooLong


class UtteranceBody(BaseModel):
    text: str


def create_app(manager: SessionManager, ui_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="facetalk", version="0.1.0")

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(
            status_code=404,
            content={"code": "unknown_session", "message": "no such session"},
        )

    @app.exception_handler(UtteranceTooLong)
    async def _too_long(request: Request, exc: UtteranceTooLong):
        return JSONResponse(
            status_code=400,
            content={"code": "utterance_too_long", "message": str(exc)},
        )

    @app.post("/v1/sessions", status_code=201)
    def create_session():
        return {"session_id": manager.create_session()}

    @app.post("/v1/sessions/{session_id}/utterances")
    def post_utterance(session_id: str, body: UtteranceBody):
        response = manager.handle_utterance(session_id, body.text)
        return response.to_json()

    @app.get("/v1/sessions/{session_id}/state")
    def get_state(session_id: str):
        state, summary = manager.get_state(session_id)
        return {"state": state, "summary": summary}

    @app.delete("/v1/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        manager.delete_session(session_id)
        return Response(status_code=204)

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

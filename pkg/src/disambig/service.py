"""HTTP+JSON wrapper around the live session engine.

POST /session            {"scene": {...}} or {"generator": {...}}, optional "seed", "policy"
POST /session/{id}/answer {"text": "..."}
GET  /session/{id}        full history
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import DisambigError, SessionDone, UnknownSession
from .scene import Ambiguity, SceneGenConfig, scene_from_dict
from .session import SessionEngine


class AnswerBody(BaseModel):
    text: str


def _generator_config(raw: dict) -> SceneGenConfig:
    kwargs = dict(raw)
    if "ambiguity_class" in kwargs:
        kwargs["ambiguity_class"] = Ambiguity(kwargs["ambiguity_class"])
    return SceneGenConfig(**kwargs)


def create_app(engine: SessionEngine | None = None, ui_dir: str | None = None) -> FastAPI:
    engine = engine or SessionEngine()
    app = FastAPI(title="disambig session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.post("/session")
    def start_session(body: dict):
        scene = None
        generator = None
        try:
            if "scene" in body:
                scene = scene_from_dict(body["scene"])
            elif "generator" in body:
                generator = _generator_config(body["generator"])
            else:
                raise HTTPException(status_code=400, detail="body needs 'scene' or 'generator'")
            return engine.start(
                scene=scene,
                generator=generator,
                seed=body.get("seed"),
                policy_name=body.get("policy"),
            )
        except DisambigError as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        except (TypeError, ValueError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from None

    @app.post("/session/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody):
        try:
            return engine.answer(session_id, body.text)
        except UnknownSession as e:
            raise HTTPException(status_code=404, detail=str(e)) from None
        except SessionDone as e:
            raise HTTPException(status_code=409, detail=str(e)) from None

    @app.get("/session/{session_id}")
    def history(session_id: str):
        try:
            return engine.history(session_id)
        except UnknownSession as e:
            raise HTTPException(status_code=404, detail=str(e)) from None

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

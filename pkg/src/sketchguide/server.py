"""HTTP and streaming facade over sessions.

Endpoints:
  POST /sessions                          create (JSON config) -> {id}
  GET  /sessions/{id}/state               current state snapshot + timing
  POST /sessions/{id}/sketch              sketch JSON -> plan JSON
  POST /sessions/{id}/environment         one binary depth frame into the baseline
  POST /sessions/{id}/frames              binary depth frame -> state delta
  GET  /sessions/{id}/overlay.png         latest overlay
  GET  /sessions/{id}/plan                plan JSON
  WS   /sessions/{id}/stream              server pushes {type:"frame", state, overlay_b64}
                                          after every processed frame; clients of
                                          simulator sessions push place/remove/
                                          marker/frame events

Domain errors map to status codes: unknown id 404, config and sketch
problems 422, missing prerequisites (plan, environment) 409.
"""

from __future__ import annotations

import asyncio
import base64
import logging

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .calibration import detect_marker
from .errors import (
    EnvironmentMissing,
    GuidanceError,
    InfeasibleStroke,
    InvalidConfig,
    NotPlanned,
)
from .frames import decode_depth_frame
from .geometry import OrientedRect, Pose2
from .render import png_bytes
from .session import SOURCE_SIMULATOR, Session, SessionConfig, SessionManager
from .simulator import render_ir

logger = logging.getLogger(__name__)


def _error_status(exc: GuidanceError) -> int:
    if isinstance(exc, (NotPlanned, EnvironmentMissing)):
        return 409
    return 422


def _error_body(exc: GuidanceError) -> dict:
    body = {"error": type(exc).__name__, "detail": str(exc)}
    if isinstance(exc, InfeasibleStroke) and exc.report is not None:
        body["report"] = exc.report.to_json()
    return body


def create_app(manager: SessionManager | None = None) -> FastAPI:
    app = FastAPI(title="sketchguide")
    # the browser studio is served from its own origin during development
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    mgr = manager or SessionManager()
    app.state.manager = mgr
    subscribers: dict[str, list[asyncio.Queue]] = {}

    @app.exception_handler(GuidanceError)
    async def _domain_error(_request, exc: GuidanceError):
        return JSONResponse(status_code=_error_status(exc), content=_error_body(exc))

    def _session_or_404(session_id: str) -> Session:
        session = mgr.get(session_id)
        if session is None:
            raise _NotFound(session_id)
        return session

    class _NotFound(Exception):
        def __init__(self, sid):
            self.sid = sid

    @app.exception_handler(_NotFound)
    async def _not_found(_request, exc: _NotFound):
        return JSONResponse(status_code=404, content={"error": "no such session", "id": exc.sid})

    async def _broadcast(session: Session, delta: dict):
        queues = subscribers.get(session.id)
        if not queues:
            return
        overlay = session.overlay_rgba()
        payload = {
            "type": "frame",
            "state": delta,
            "snapshot": session.state_snapshot(),
            "overlay_b64": base64.b64encode(png_bytes(overlay)).decode("ascii")
            if overlay is not None
            else None,
        }
        for q in list(queues):
            q.put_nowait(payload)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        config = SessionConfig.from_json(body)
        session = mgr.create(config)
        return {"id": session.id, "state": session.state_snapshot()}

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str):
        session = _session_or_404(session_id)
        return {**session.state_snapshot(), "timing": session.metrics()}

    @app.post("/sessions/{session_id}/sketch")
    async def post_sketch(session_id: str, request: Request):
        session = _session_or_404(session_id)
        doc = await request.json()
        plan = session.submit_sketch(doc)
        return plan.to_json()

    @app.get("/sessions/{session_id}/plan")
    async def get_plan(session_id: str):
        session = _session_or_404(session_id)
        if session.plan is None:
            return JSONResponse(status_code=404, content={"error": "no plan yet"})
        return session.plan.to_json()

    @app.post("/sessions/{session_id}/environment")
    async def post_environment(session_id: str, request: Request):
        session = _session_or_404(session_id)
        body = await request.body()
        frame = decode_depth_frame(body)
        count = session.add_environment_frame(frame)
        return {"captured": count}

    @app.post("/sessions/{session_id}/frames")
    async def post_frame(session_id: str, request: Request):
        session = _session_or_404(session_id)
        body = await request.body()
        frame = decode_depth_frame(body)
        delta = session.process_frame(frame)
        if not delta.get("dropped"):
            await _broadcast(session, delta)
        return delta

    @app.get("/sessions/{session_id}/overlay.png")
    async def get_overlay(session_id: str):
        session = _session_or_404(session_id)
        png = session.overlay_png()
        if png is None:
            return JSONResponse(status_code=404, content={"error": "no overlay yet"})
        return Response(content=png, media_type="image/png")

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        session = mgr.get(session_id)
        await websocket.accept()
        if session is None:
            await websocket.send_json({"type": "error", "error": "no such session"})
            await websocket.close()
            return
        queue: asyncio.Queue = asyncio.Queue()
        subscribers.setdefault(session.id, []).append(queue)
        await websocket.send_json({"type": "hello", "snapshot": session.state_snapshot()})

        async def pump():
            while True:
                payload = await queue.get()
                await websocket.send_json(payload)

        sender = asyncio.create_task(pump())
        try:
            while True:
                msg = await websocket.receive_json()
                try:
                    reply = await _handle_stream_event(session, msg)
                except GuidanceError as exc:
                    reply = {"type": "error", **_error_body(exc)}
                except (KeyError, TypeError, ValueError) as exc:
                    reply = {"type": "error", "error": "bad event", "detail": str(exc)}
                if reply is not None:
                    await websocket.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            subscribers[session.id].remove(queue)

    async def _handle_stream_event(session: Session, msg: dict):
        op = msg.get("op")
        if op in ("place", "remove", "marker", "frame") and session.scene is None:
            raise InvalidConfig("session frame source is not the simulator")
        if op == "place":
            r = msg["rect"]
            rect = OrientedRect(
                Pose2(float(r["x"]), float(r["y"]), float(r["theta"])),
                float(r["w"]),
                float(r["t"]),
            )
            try:
                handle = session.scene.place(rect, float(msg["height"]))
            except ValueError as exc:
                return {"type": "error", "error": "bad placement", "detail": str(exc)}
            return {"type": "placed", "handle": handle}
        if op == "remove":
            try:
                session.scene.remove(int(msg["index"]))
            except KeyError as exc:
                return {"type": "error", "error": "bad handle", "detail": str(exc)}
            return {"type": "removed", "index": int(msg["index"])}
        if op == "marker":
            point = msg.get("point")
            session.scene.set_marker(tuple(point) if point else None)
            found = None
            if point:
                ir = render_ir(session.scene, session.profile)
                cam = detect_marker(ir)
                if cam is not None:
                    ws = session.profile.camera_to_workspace(cam)
                    found = {"cam": [cam[0], cam[1]], "workspace": [ws[0], ws[1]]}
            return {"type": "marker", "detected": found}
        if op == "frame":
            delta = session.simulate_frame()
            if not delta.get("dropped"):
                await _broadcast(session, delta)
                return None  # subscribers (including this socket) get the push
            return {"type": "dropped"}
        if op == "state":
            return {"type": "state", "snapshot": session.state_snapshot()}
        return {"type": "error", "error": f"unknown op {op!r}"}

    return app


def main_app() -> FastAPI:
    """Entry point for `uvicorn sketchguide.server:main_app --factory`."""
    return create_app()

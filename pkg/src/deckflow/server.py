"""WebSocket and HTTP surface over the engine.

One asyncio lock serializes every engine call, which realizes the
single-writer contract; sockets only ferry JSON in and out. Clients join a
document room and receive committed mutations in rev order; workers get
job_assign/cancel pushes and answer with status and result messages. Media
bytes never cross the WebSocket: they ride the /assets HTTP side channel.
"""

from __future__ import annotations

import asyncio
import logging
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from starlette.websockets import WebSocket, WebSocketDisconnect

from .docfile import write_log
from .engine import ClientResult, Engine, WorkerResult
from .errors import (
    AssetNotFound,
    AssetTooLarge,
    DeckFlowError,
    DocNotFound,
    DuplicateRegistration,
    UnknownJob,
    UnsupportedMediaType,
)
from .hub import JobType
from .model import Position

log = logging.getLogger("deckflow.server")


class Rooms:
    """Which client sockets watch which document, and worker sockets by id."""

    def __init__(self) -> None:
        self.clients: dict[str, set[WebSocket]] = {}
        self.workers: dict[str, WebSocket] = {}

    def join(self, doc_id: str, ws: WebSocket) -> None:
        self.clients.setdefault(doc_id, set()).add(ws)

    def drop_client(self, ws: WebSocket) -> None:
        for members in self.clients.values():
            members.discard(ws)

    async def send_events(self, events: list[dict]) -> None:
        for event in events:
            if event.get("kind") == "server_status":
                targets = {ws for members in self.clients.values() for ws in members}
            else:
                targets = set(self.clients.get(event.get("doc_id", ""), ()))
            for ws in targets:
                try:
                    await ws.send_json(event)
                except Exception:
                    pass  # a dead socket is cleaned up by its own handler

    async def send_to_worker(self, worker_id: str, message: dict) -> None:
        ws = self.workers.get(worker_id)
        if ws is None:
            return
        try:
            await ws.send_json(message)
        except Exception:
            pass


def create_app(engine: Engine, record_path: Optional[Path] = None) -> FastAPI:
    rooms = Rooms()
    lock = asyncio.Lock()
    if record_path is not None:
        engine.recording = []

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        async with lock:
            engine.persist_all()
            if record_path is not None and engine.recording is not None:
                doc_ids = {e["envelope"].get("doc_id") for e in engine.recording}
                doc_id = next((d for d in doc_ids if d), "unknown")
                write_log(record_path, doc_id, engine.recording)

    # interactive API docs are disabled so GET /docs can serve the document list
    app = FastAPI(docs_url=None, redoc_url=None, openapi_url=None, lifespan=lifespan)

    app.state.engine = engine
    app.state.rooms = rooms

    async def deliver(result) -> None:
        await rooms.send_events(result.events)
        for assign in result.assignments:
            await rooms.send_to_worker(
                assign.worker_id,
                {
                    "kind": "job_assign",
                    "body": {
                        "job_id": assign.job.job_id,
                        "type": assign.job.type.value,
                        "payload": assign.job.payload,
                        "required_model": assign.job.required_model,
                        "target_card": assign.job.target_card,
                        "doc_id": assign.job.doc_id,
                    },
                },
            )
        for cancel in result.cancels:
            await rooms.send_to_worker(
                cancel.worker_id, {"kind": "cancel", "body": {"job_id": cancel.job_id}}
            )

    # -- client sockets -----------------------------------------------------

    @app.websocket("/ws/client")
    async def ws_client(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                envelope = await ws.receive_json()
                async with lock:
                    result: ClientResult = engine.handle_client(envelope)
                response = result.response
                if response.get("kind") == "snapshot":
                    rooms.join(response["doc_id"], ws)
                await ws.send_json(response)
                await deliver(result)
        except WebSocketDisconnect:
            pass
        finally:
            rooms.drop_client(ws)

    # -- worker sockets ------------------------------------------------------

    @app.websocket("/ws/worker")
    async def ws_worker(ws: WebSocket):
        await ws.accept()
        worker_id: Optional[str] = None
        try:
            while True:
                envelope = await ws.receive_json()
                kind = envelope.get("kind")
                msg_id = envelope.get("msg_id")
                body = envelope.get("body") or {}
                try:
                    async with lock:
                        if kind == "register":
                            if worker_id is not None:
                                raise DuplicateRegistration(
                                    "this connection already registered"
                                )
                            capabilities = [JobType(t) for t in body.get("capabilities", [])]
                            worker_id, result = engine.worker_register(
                                capabilities, body.get("loaded_models", ())
                            )
                            rooms.workers[worker_id] = ws
                            response = {
                                "msg_id": msg_id,
                                "kind": "ack",
                                "body": {"worker_id": worker_id},
                            }
                        elif worker_id is None:
                            raise UnknownJob("register first")
                        elif kind == "heartbeat":
                            result = engine.worker_heartbeat(
                                worker_id, body.get("loaded_models")
                            )
                            response = {"msg_id": msg_id, "kind": "ack", "body": {}}
                        elif kind == "job_status":
                            result = engine.worker_status(
                                body["job_id"], int(body["seq"]), str(body.get("message", ""))
                            )
                            response = {"msg_id": msg_id, "kind": "ack", "body": {}}
                        elif kind == "job_result":
                            result = await _handle_result(engine, body)
                            response = {"msg_id": msg_id, "kind": "ack", "body": {}}
                        else:
                            raise UnknownJob(f"unknown worker message {kind!r}")
                except DeckFlowError as exc:
                    await ws.send_json(
                        {
                            "msg_id": msg_id,
                            "kind": "error",
                            "body": {"code": exc.code, "message": exc.message},
                        }
                    )
                    continue
                await ws.send_json(response)
                await deliver(result)
        except WebSocketDisconnect:
            pass
        finally:
            if worker_id is not None:
                rooms.workers.pop(worker_id, None)
                async with lock:
                    result = engine.worker_lost(worker_id)
                await deliver(result)

    async def _handle_result(eng: Engine, body: dict) -> WorkerResult:
        job_id = body["job_id"]
        if body.get("ok"):
            if "text" in body:
                data = str(body["text"]).encode("utf-8")
                media_type = "text/plain"
            else:
                data = eng.assets.get(body["asset_id"])
                media_type = body.get("media_type") or eng.assets.media_type(
                    body["asset_id"]
                )
            return eng.complete_job(job_id, data, media_type)
        if body.get("cancelled"):
            # free the worker; the hub discards results for cancelled jobs
            return eng.complete_job(job_id, b"", "application/octet-stream")
        return eng.fail_job(job_id, str(body.get("error", "worker failure")))

    # -- HTTP ------------------------------------------------------------------

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/docs")
    async def docs_list():
        async with lock:
            return engine.list_docs()

    @app.get("/assets/{asset_id}")
    async def get_asset(asset_id: str):
        try:
            data = engine.assets.get(asset_id)
            media_type = engine.assets.media_type(asset_id)
        except AssetNotFound as exc:
            return Response(exc.message, status_code=404)
        return Response(data, media_type=media_type)

    @app.put("/assets")
    async def put_asset(request: Request):
        data = await request.body()
        media_type = request.headers.get("content-type", "")
        try:
            ref = engine.assets.put(data, media_type)
        except AssetTooLarge as exc:
            return Response(exc.message, status_code=413)
        except UnsupportedMediaType as exc:
            return Response(exc.message, status_code=400)
        return ref.to_dict()

    @app.post("/docs/{doc_id}/ingest")
    async def ingest(doc_id: str, request: Request, filename: str, x: float = 0.0, y: float = 0.0):
        data = await request.body()
        try:
            async with lock:
                card, result = engine.ingest_upload(
                    doc_id, data, filename, Position(x, y)
                )
        except UnsupportedMediaType as exc:
            return Response(exc.message, status_code=415)
        except DocNotFound as exc:
            return Response(exc.message, status_code=404)
        await deliver(result)
        return card.to_dict()

    return app

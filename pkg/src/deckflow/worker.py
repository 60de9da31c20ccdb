"""Worker process: connects to the gateway, pulls jobs, reports progress.

A worker holds one job at a time. Media results are uploaded over the
/assets HTTP channel and referenced by id in the job_result message; text
results travel inline. On connection loss the worker reconnects with capped
backoff and re-registers (the server requeues whatever it was running).
"""

from __future__ import annotations

import asyncio
import json
import logging
from typing import Iterable, Optional
from urllib.parse import urlsplit, urlunsplit

import httpx
import websockets

from .adapters import AdapterSet
from .hub import JobType

log = logging.getLogger("deckflow.worker")

STATUS_LABELS = {
    JobType.generate_text: "Generating Text",
    JobType.generate_image: "Generating Image",
    JobType.generate_audio: "Generating Audio",
    JobType.interpret_data: "Interpreting Data",
    JobType.expand_prompt: "Expanding Prompt",
}

BACKOFF_START_S = 0.5
BACKOFF_CAP_S = 10.0
HEARTBEAT_S = 10.0


def execute_job(adapters: AdapterSet, job_type: JobType, payload: dict):
    """Run one job against the adapter set.

    Returns str for text-producing jobs, (bytes, media_type) for media.
    """
    prompt = payload.get("prompt", "")
    seed = int(payload.get("seed", 0))
    sample = int(payload.get("sample_index", 0))
    if job_type == JobType.generate_image:
        return adapters.image.generate(prompt, seed, sample), adapters.image.media_type
    if job_type == JobType.generate_audio:
        return adapters.audio.generate(prompt, seed, sample), adapters.audio.media_type
    if job_type == JobType.generate_text:
        text, _ = adapters.text.generate(prompt, payload.get("max_tokens"))
        return text
    if job_type == JobType.interpret_data:
        return adapters.vision.describe(payload.get("asset_id", ""), payload.get("label", ""))
    if job_type == JobType.expand_prompt:
        return adapters.expand.expand(prompt)
    raise ValueError(f"unsupported job type {job_type}")


def http_base_from_ws(url: str) -> str:
    parts = urlsplit(url)
    scheme = "https" if parts.scheme == "wss" else "http"
    return urlunsplit((scheme, parts.netloc, "", "", ""))


class WorkerClient:
    def __init__(
        self,
        url: str,
        adapters: AdapterSet,
        capabilities: Iterable[JobType],
        loaded_models: Iterable[str] = (),
        heartbeat_s: float = HEARTBEAT_S,
    ):
        self.url = url
        self.adapters = adapters
        self.capabilities = list(capabilities)
        if not self.capabilities:
            raise ValueError("a worker needs at least one capability")
        self.loaded_models = set(loaded_models)
        self.heartbeat_s = heartbeat_s
        self.http_base = http_base_from_ws(url)
        self.worker_id: Optional[str] = None
        self._cancelled: set[str] = set()
        self._msg_seq = 0
        self._stop = asyncio.Event()

    def stop(self) -> None:
        self._stop.set()

    def _msg_id(self) -> str:
        self._msg_seq += 1
        return f"wk-{self._msg_seq}"

    async def run(self) -> None:
        backoff = BACKOFF_START_S
        while not self._stop.is_set():
            try:
                async with websockets.connect(self.url, max_size=None) as ws:
                    backoff = BACKOFF_START_S
                    await self._session(ws)
            except (OSError, websockets.WebSocketException) as exc:
                if self._stop.is_set():
                    return
                log.warning("connection lost (%s); retrying in %.1fs", exc, backoff)
                await asyncio.sleep(backoff)
                backoff = min(backoff * 2, BACKOFF_CAP_S)

    async def _session(self, ws) -> None:
        await ws.send(
            json.dumps(
                {
                    "msg_id": self._msg_id(),
                    "kind": "register",
                    "body": {
                        "capabilities": [t.value for t in self.capabilities],
                        "loaded_models": sorted(self.loaded_models),
                    },
                }
            )
        )
        registered = json.loads(await ws.recv())
        if registered.get("kind") != "ack":
            raise RuntimeError(f"registration rejected: {registered}")
        self.worker_id = registered["body"]["worker_id"]
        log.info("registered as %s", self.worker_id)

        heartbeat = asyncio.create_task(self._heartbeat_loop(ws))
        try:
            async for raw in ws:
                message = json.loads(raw)
                kind = message.get("kind")
                if kind == "job_assign":
                    await self._run_job(ws, message["body"])
                elif kind == "cancel":
                    self._cancelled.add(message["body"]["job_id"])
                # acks and errors for our own sends need no action
                if self._stop.is_set():
                    return
        finally:
            heartbeat.cancel()

    async def _heartbeat_loop(self, ws) -> None:
        while True:
            await asyncio.sleep(self.heartbeat_s)
            await ws.send(
                json.dumps(
                    {
                        "msg_id": self._msg_id(),
                        "kind": "heartbeat",
                        "body": {"loaded_models": sorted(self.loaded_models)},
                    }
                )
            )

    async def _run_job(self, ws, job: dict) -> None:
        job_id = job["job_id"]
        job_type = JobType(job["type"])
        payload = job.get("payload", {})
        await ws.send(
            json.dumps(
                {
                    "msg_id": self._msg_id(),
                    "kind": "job_status",
                    "body": {
                        "job_id": job_id,
                        "seq": 1,
                        "message": STATUS_LABELS.get(job_type, "Working"),
                    },
                }
            )
        )
        try:
            result = await asyncio.get_event_loop().run_in_executor(
                None, execute_job, self.adapters, job_type, payload
            )
        except Exception as exc:
            body = {"job_id": job_id, "ok": False, "error": str(exc)}
        else:
            if job_id in self._cancelled:
                self._cancelled.discard(job_id)
                body = {"job_id": job_id, "cancelled": True}
            elif isinstance(result, str):
                body = {"job_id": job_id, "ok": True, "text": result}
            else:
                data, media_type = result
                ref = await self._upload(data, media_type)
                body = {
                    "job_id": job_id,
                    "ok": True,
                    "asset_id": ref["asset_id"],
                    "media_type": media_type,
                }
        required = job.get("required_model")
        if required:
            self.loaded_models.add(required)
        await ws.send(json.dumps({"msg_id": self._msg_id(), "kind": "job_result", "body": body}))

    async def _upload(self, data: bytes, media_type: str) -> dict:
        async with httpx.AsyncClient(base_url=self.http_base) as client:
            response = await client.put(
                "/assets", content=data, headers={"content-type": media_type}
            )
            response.raise_for_status()
            return response.json()


def run_worker(
    url: str,
    adapters: AdapterSet,
    capabilities: Iterable[JobType],
    loaded_models: Iterable[str] = (),
) -> None:
    client = WorkerClient(url, adapters, capabilities, loaded_models)
    try:
        asyncio.run(client.run())
    except KeyboardInterrupt:
        pass

"""HTTP clients for real model backends.

Each client normalizes its endpoint's response into the same shape the mocks
return, so everything above the adapter boundary is backend-agnostic.
Requests per endpoint are bounded by a semaphore; oversized or non-2xx
responses surface as AdapterFailure.
"""

from __future__ import annotations

import base64
import os
import threading
from typing import Callable, Optional

import httpx

from ..errors import AdapterFailure, ConfigMissing

RESPONSE_CAP_BYTES = 32 * 1024 * 1024
DEFAULT_TIMEOUT_S = 60.0
DEFAULT_MAX_CONCURRENCY = 4


class _HttpBackend:
    def __init__(
        self,
        name: str,
        endpoint: Optional[str],
        api_key_env: Optional[str] = None,
        max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        if not endpoint:
            raise ConfigMissing(f"adapter {name!r} has no endpoint configured")
        self.name = name
        self.endpoint = endpoint
        headers = {}
        if api_key_env:
            key = os.environ.get(api_key_env)
            if not key:
                raise ConfigMissing(
                    f"adapter {name!r} expects credentials in ${api_key_env}"
                )
            headers["Authorization"] = f"Bearer {key}"
        self._sem = threading.Semaphore(max_concurrency)
        self._client = httpx.Client(
            headers=headers, timeout=DEFAULT_TIMEOUT_S, transport=transport
        )

    def post(self, payload: dict) -> httpx.Response:
        with self._sem:
            try:
                response = self._client.post(self.endpoint, json=payload)
            except httpx.HTTPError as exc:
                raise AdapterFailure(f"{self.name}: {self.endpoint}: {exc}") from exc
        if response.status_code < 200 or response.status_code >= 300:
            raise AdapterFailure(
                f"{self.name}: {self.endpoint} returned {response.status_code}"
            )
        if len(response.content) > RESPONSE_CAP_BYTES:
            raise AdapterFailure(f"{self.name}: response too large")
        return response

    def post_json(self, payload: dict) -> dict:
        response = self.post(payload)
        try:
            body = response.json()
        except ValueError as exc:
            raise AdapterFailure(f"{self.name}: response is not JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise AdapterFailure(f"{self.name}: response is not an object")
        return body


class ExternalTextAdapter:
    def __init__(self, name: str, model_name: str, **kwargs):
        self.model_name = model_name
        self._http = _HttpBackend(name, **kwargs)
        self.calls = 0

    def run(
        self,
        template: str,
        inputs: dict[str, str],
        max_tokens: Optional[int] = None,
        prompt: Optional[str] = None,
    ) -> tuple[str, bool]:
        self.calls += 1
        body = self._http.post_json(
            {"template": template, "inputs": inputs, "prompt": prompt, "max_tokens": max_tokens}
        )
        try:
            return str(body["text"]), bool(body.get("truncated", False))
        except KeyError as exc:
            raise AdapterFailure(f"{self._http.name}: response missing {exc}") from exc

    def generate(self, prompt: str, max_tokens: Optional[int] = None) -> tuple[str, bool]:
        return self.run("generate", {"prompt": prompt}, max_tokens)


class ExternalMediaAdapter:
    """Image or audio generation; the endpoint replies with raw media bytes."""

    def __init__(self, name: str, model_name: str, media_type: str, **kwargs):
        self.model_name = model_name
        self.media_type = media_type
        self._http = _HttpBackend(name, **kwargs)
        self.calls = 0

    def generate(self, prompt: str, seed: int = 0, sample_index: int = 0) -> bytes:
        self.calls += 1
        response = self._http.post(
            {"prompt": prompt, "seed": seed, "sample_index": sample_index}
        )
        if not response.content:
            raise AdapterFailure(f"{self._http.name}: empty media response")
        return response.content


class ExternalVisionAdapter:
    def __init__(
        self,
        name: str,
        model_name: str,
        asset_loader: Callable[[str], bytes],
        **kwargs,
    ):
        self.model_name = model_name
        self._load = asset_loader
        self._http = _HttpBackend(name, **kwargs)
        self.calls = 0

    def describe(self, asset_id: str, label: str = "") -> str:
        self.calls += 1
        image_b64 = base64.b64encode(self._load(asset_id)).decode("ascii")
        body = self._http.post_json({"image_base64": image_b64, "label": label})
        try:
            return str(body["text"])
        except KeyError as exc:
            raise AdapterFailure(f"{self._http.name}: response missing {exc}") from exc


class ExternalExpandAdapter:
    def __init__(self, name: str, model_name: str, **kwargs):
        self.model_name = model_name
        self._http = _HttpBackend(name, **kwargs)
        self.calls = 0

    def expand(self, prompt: str) -> str:
        self.calls += 1
        body = self._http.post_json({"prompt": prompt})
        try:
            return str(body["text"])
        except KeyError as exc:
            raise AdapterFailure(f"{self._http.name}: response missing {exc}") from exc

"""Pluggable model backends: deterministic mocks and external HTTP clients.

An AdapterSet bundles one adapter per capability. Configuration is a JSON
list of specs; a spec with an endpoint becomes an HTTP client, and the
reserved mock names select the built-in deterministic backends. The shipped
fixture file scripts the walkthrough responses; everything else falls back
to the rule-based mock strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Union

from ..errors import BadConfig, ConfigMissing
from .external import (
    ExternalExpandAdapter,
    ExternalMediaAdapter,
    ExternalTextAdapter,
    ExternalVisionAdapter,
)
from .fnv import fnv1a64
from .mock import (
    FixtureTable,
    MockAudioAdapter,
    MockExpandAdapter,
    MockImageAdapter,
    MockTextAdapter,
    MockVisionAdapter,
)

CAP_TEXT = "text_gen"
CAP_IMAGE = "image_gen"
CAP_AUDIO = "audio_gen"
CAP_VISION = "vision_describe"
CAP_EXPAND = "prompt_expand"
ALL_CAPABILITIES = (CAP_TEXT, CAP_IMAGE, CAP_AUDIO, CAP_VISION, CAP_EXPAND)

_MOCK_NAMES = {
    "mock-text": CAP_TEXT,
    "mock-image": CAP_IMAGE,
    "mock-audio": CAP_AUDIO,
    "mock-vision": CAP_VISION,
    "mock-expand": CAP_EXPAND,
}


@dataclass
class AdapterSpec:
    name: str
    provides: list[str]
    model_name: str
    endpoint: Optional[str] = None
    api_key_env: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict, index: int) -> AdapterSpec:
        where = f"adapters[{index}]"
        if not isinstance(d, dict):
            raise BadConfig(f"{where}: expected an object")
        name = d.get("name")
        if not name or not isinstance(name, str):
            raise BadConfig(f"{where}.name: required string")
        provides = d.get("provides")
        if not isinstance(provides, list) or not provides:
            raise BadConfig(f"{where}.provides: required nonempty list")
        for cap in provides:
            if cap not in ALL_CAPABILITIES:
                raise BadConfig(f"{where}.provides: unknown capability {cap!r}")
        model_name = d.get("model_name")
        if not model_name or not isinstance(model_name, str):
            raise BadConfig(f"{where}.model_name: required string")
        return cls(
            name=name,
            provides=list(provides),
            model_name=model_name,
            endpoint=d.get("endpoint"),
            api_key_env=d.get("api_key_env"),
        )


def packaged_fixtures() -> FixtureTable:
    text = resources.files("deckflow").joinpath("fixtures/walkthrough.json").read_text("utf-8")
    return FixtureTable.from_payload(json.loads(text))


@dataclass
class AdapterSet:
    text: object
    image: object
    audio: object
    vision: object
    expand: object
    model_names: dict[str, str] = field(default_factory=dict)

    def model_for(self, capability: str) -> str:
        return self.model_names[capability]

    @classmethod
    def mocks(cls, fixtures: Optional[FixtureTable] = None) -> AdapterSet:
        fixtures = fixtures if fixtures is not None else packaged_fixtures()
        adapters = cls(
            text=MockTextAdapter(fixtures),
            image=MockImageAdapter(),
            audio=MockAudioAdapter(),
            vision=MockVisionAdapter(fixtures),
            expand=MockExpandAdapter(fixtures),
        )
        adapters.model_names = {
            CAP_TEXT: adapters.text.model_name,
            CAP_IMAGE: adapters.image.model_name,
            CAP_AUDIO: adapters.audio.model_name,
            CAP_VISION: adapters.vision.model_name,
            CAP_EXPAND: adapters.expand.model_name,
        }
        return adapters

    @classmethod
    def from_specs(
        cls,
        specs: list[AdapterSpec],
        fixtures: Optional[FixtureTable] = None,
        asset_loader: Optional[Callable[[str], bytes]] = None,
    ) -> AdapterSet:
        adapters = cls.mocks(fixtures)
        for spec in specs:
            for cap in spec.provides:
                adapters._install(spec, cap, asset_loader)
        return adapters

    def _install(
        self,
        spec: AdapterSpec,
        capability: str,
        asset_loader: Optional[Callable[[str], bytes]],
    ) -> None:
        if spec.endpoint is None:
            if spec.name not in _MOCK_NAMES:
                raise ConfigMissing(f"adapter {spec.name!r} has no endpoint configured")
            self.model_names[capability] = spec.model_name
            return  # built-in mock already in place
        common = {"endpoint": spec.endpoint, "api_key_env": spec.api_key_env}
        if capability == CAP_TEXT:
            self.text = ExternalTextAdapter(spec.name, spec.model_name, **common)
        elif capability == CAP_IMAGE:
            self.image = ExternalMediaAdapter(spec.name, spec.model_name, "image/png", **common)
        elif capability == CAP_AUDIO:
            self.audio = ExternalMediaAdapter(spec.name, spec.model_name, "audio/wav", **common)
        elif capability == CAP_VISION:
            if asset_loader is None:
                raise ConfigMissing(f"adapter {spec.name!r} needs an asset store for images")
            self.vision = ExternalVisionAdapter(
                spec.name, spec.model_name, asset_loader, **common
            )
        elif capability == CAP_EXPAND:
            self.expand = ExternalExpandAdapter(spec.name, spec.model_name, **common)
        self.model_names[capability] = spec.model_name


def load_adapter_specs(path: Union[str, Path]) -> list[AdapterSpec]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise BadConfig(f"cannot read adapter config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadConfig(f"adapter config {path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, list):
        raise BadConfig("adapter config: expected a JSON list of adapter specs")
    return [AdapterSpec.from_dict(d, i) for i, d in enumerate(payload)]


__all__ = [
    "ALL_CAPABILITIES",
    "CAP_AUDIO",
    "CAP_EXPAND",
    "CAP_IMAGE",
    "CAP_TEXT",
    "CAP_VISION",
    "AdapterSet",
    "AdapterSpec",
    "FixtureTable",
    "fnv1a64",
    "load_adapter_specs",
    "packaged_fixtures",
]

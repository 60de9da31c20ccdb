"""Domain entities for the canvas graph.

Leaf types only; the aggregate root with its mutation operations lives in
``document``. All entities serialize to plain JSON-compatible dicts so the
document file, clipboard, and mutation events share one representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional

from .errors import InvalidPosition

# Default card dimensions in canvas units; the UI owns pixel mapping.
TEXT_CARD_SIZE = (240.0, 140.0)
IMAGE_CARD_SIZE = (240.0, 240.0)
AUDIO_CARD_SIZE = (240.0, 90.0)
GRID_GAP = 24.0

BUBBLE_MAX_CHARS = 120


class Modality(str, Enum):
    text = "text"
    image = "image"
    audio = "audio"


class GenStateName(str, Enum):
    waiting = "waiting"
    loading = "loading"
    error = "error"
    success = "success"


def default_size(kind: Modality) -> Size:
    w, h = {
        Modality.text: TEXT_CARD_SIZE,
        Modality.image: IMAGE_CARD_SIZE,
        Modality.audio: AUDIO_CARD_SIZE,
    }[kind]
    return Size(w, h)


@dataclass
class Position:
    x: float
    y: float

    def __post_init__(self):
        self.x = float(self.x)
        self.y = float(self.y)
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidPosition(f"position must be finite, got ({self.x}, {self.y})")

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y}

    @classmethod
    def from_dict(cls, d: dict) -> Position:
        return cls(d["x"], d["y"])


@dataclass
class Size:
    width: float
    height: float

    def __post_init__(self):
        self.width = float(self.width)
        self.height = float(self.height)
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"size must be positive, got {self.width}x{self.height}")

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> Size:
        return cls(d["width"], d["height"])


@dataclass(frozen=True)
class AssetRef:
    """Content address of stored media: lowercase hex sha-256 plus metadata."""

    id: str
    media_type: str
    byte_length: int

    def to_dict(self) -> dict:
        return {"asset_id": self.id, "media_type": self.media_type, "byte_length": self.byte_length}

    @classmethod
    def from_dict(cls, d: dict) -> AssetRef:
        return cls(d["asset_id"], d["media_type"], d["byte_length"])


@dataclass
class GenState:
    state: GenStateName = GenStateName.success
    bubble: Optional[str] = None

    def to_dict(self) -> dict:
        return {"state": self.state.value, "bubble": self.bubble}

    @classmethod
    def from_dict(cls, d: dict) -> GenState:
        return cls(GenStateName(d["state"]), d.get("bubble"))


@dataclass(frozen=True)
class Provenance:
    """How a generated card came to be; historical, never re-resolved."""

    influencers: tuple[str, ...]
    method: str
    prompt: str
    job_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "influencers": list(self.influencers),
            "method": self.method,
            "prompt": self.prompt,
            "job_id": self.job_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Provenance:
        return cls(tuple(d["influencers"]), d["method"], d["prompt"], d.get("job_id"))


@dataclass
class DataCard:
    id: str
    kind: Modality
    position: Position
    size: Size
    content: Any = None  # str for text, AssetRef or None for media
    annotation: Optional[str] = None
    gen_state: GenState = field(default_factory=GenState)
    provenance: Optional[Provenance] = None
    truncated: bool = False  # text cards only: adapter hit its token budget
    filename: Optional[str] = None  # original name of an uploaded file

    def to_dict(self) -> dict:
        content: Any = self.content
        if isinstance(content, AssetRef):
            content = content.to_dict()
        return {
            "id": self.id,
            "kind": self.kind.value,
            "position": self.position.to_dict(),
            "size": self.size.to_dict(),
            "content": content,
            "annotation": self.annotation,
            "gen_state": self.gen_state.to_dict(),
            "provenance": self.provenance.to_dict() if self.provenance else None,
            "truncated": self.truncated,
            "filename": self.filename,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DataCard:
        kind = Modality(d["kind"])
        content = d.get("content")
        if isinstance(content, dict):
            content = AssetRef.from_dict(content)
        return cls(
            id=d["id"],
            kind=kind,
            position=Position.from_dict(d["position"]),
            size=Size.from_dict(d["size"]),
            content=content,
            annotation=d.get("annotation"),
            gen_state=GenState.from_dict(d["gen_state"]),
            provenance=Provenance.from_dict(d["provenance"]) if d.get("provenance") else None,
            truncated=bool(d.get("truncated", False)),
            filename=d.get("filename"),
        )


@dataclass
class Slot:
    slot_id: str
    label: str = ""
    connection: Optional[str] = None  # id of a data card or cluster

    def to_dict(self) -> dict:
        return {"slot_id": self.slot_id, "label": self.label, "connection": self.connection}

    @classmethod
    def from_dict(cls, d: dict) -> Slot:
        return cls(d["slot_id"], d.get("label", ""), d.get("connection"))


@dataclass
class ActionCard:
    id: str
    position: Position
    target_modality: Modality
    slots: list[Slot] = field(default_factory=list)
    trigger_count: int = 0
    slot_seq: int = 0  # never decremented, so removed slot ids are not reused

    def slot(self, slot_id: str) -> Optional[Slot]:
        for s in self.slots:
            if s.slot_id == slot_id:
                return s
        return None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "position": self.position.to_dict(),
            "target_modality": self.target_modality.value,
            "slots": [s.to_dict() for s in self.slots],
            "trigger_count": self.trigger_count,
            "slot_seq": self.slot_seq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ActionCard:
        return cls(
            id=d["id"],
            position=Position.from_dict(d["position"]),
            target_modality=Modality(d["target_modality"]),
            slots=[Slot.from_dict(s) for s in d.get("slots", [])],
            trigger_count=int(d.get("trigger_count", 0)),
            slot_seq=int(d.get("slot_seq", 0)),
        )


@dataclass
class Cluster:
    id: str
    position: Position
    label: Optional[str] = None
    members: list[str] = field(default_factory=list)
    cached_interpretation: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "position": self.position.to_dict(),
            "label": self.label,
            "members": list(self.members),
            "cached_interpretation": self.cached_interpretation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Cluster:
        return cls(
            id=d["id"],
            position=Position.from_dict(d["position"]),
            label=d.get("label"),
            members=list(d.get("members", [])),
            cached_interpretation=d.get("cached_interpretation"),
        )


def clip_bubble(text: Optional[str]) -> Optional[str]:
    """Bubbles are glanceable; anything longer than the cap is cut."""
    if text is None:
        return None
    return text[:BUBBLE_MAX_CHARS]


def copy_card(card: DataCard, new_id: str) -> DataCard:
    """Deep copy with a fresh id; provenance keeps pointing at the originals."""
    return replace(
        card,
        id=new_id,
        position=Position(card.position.x, card.position.y),
        size=Size(card.size.width, card.size.height),
        gen_state=GenState(card.gen_state.state, card.gen_state.bubble),
    )

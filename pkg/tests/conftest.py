from __future__ import annotations

from pathlib import Path

import pytest

from deckflow.adapters import AdapterSet
from deckflow.document import Document
from deckflow.ids import FixedClock
from deckflow.model import AssetRef, Modality, Position
from deckflow.templates import TemplateStore

# replaying the packaged walkthrough log must always produce this document
WALKTHROUGH_LOG = Path(__file__).resolve().parents[1] / (
    "src/deckflow/fixtures/walkthrough.log"
)
WALKTHROUGH_HASH = "2b5a4f5786913d6cfda7a472c3a37ec83617a274f53db87acab68163d41106f3"


@pytest.fixture
def adapters() -> AdapterSet:
    return AdapterSet.mocks()


@pytest.fixture
def templates() -> TemplateStore:
    return TemplateStore()


@pytest.fixture
def doc() -> Document:
    return Document("doc-t", clock=FixedClock(), deterministic=True)


def text_card(doc: Document, text: str, x: float = 0.0, y: float = 0.0):
    return doc.create_card(Modality.text, Position(x, y), content=text)


def media_card(doc: Document, kind: Modality, ref: AssetRef, x: float = 0.0, y: float = 0.0):
    return doc.create_card(kind, Position(x, y), content=ref)


def fake_ref(seed: str = "ab", media_type: str = "image/png") -> AssetRef:
    return AssetRef((seed * 64)[:64], media_type, 128)

"""Generation lifecycle for data cards.

States: waiting, loading, error, success. A generated card is spawned
waiting, moves to loading on the first worker status, and ends in success
(content assigned exactly once) or error. waiting can also jump straight to
error when its job is cancelled before pickup. Anything else is rejected
without touching the card.
"""

from __future__ import annotations

from typing import Optional, Union

from .errors import IllegalTransition, MissingPayload
from .ids import ulid_created_at
from .model import (
    AssetRef,
    DataCard,
    GenState,
    GenStateName,
    Modality,
    Position,
    Provenance,
    Size,
    clip_bubble,
    default_size,
)
from .document import Document

LEGAL_TRANSITIONS: frozenset[tuple[GenStateName, GenStateName]] = frozenset(
    {
        (GenStateName.waiting, GenStateName.loading),
        (GenStateName.waiting, GenStateName.error),
        (GenStateName.loading, GenStateName.success),
        (GenStateName.loading, GenStateName.error),
    }
)

QUEUED_BUBBLE = "queued"
CANCELLED_BUBBLE = "cancelled"
RETRYING_BUBBLE = "retrying"


def spawn_pending(
    doc: Document,
    kind: Modality,
    position: Position,
    provenance: Provenance,
    size: Optional[Size] = None,
) -> DataCard:
    """Create an empty placeholder card. Must run inside an open mutation,
    so a trigger's whole fanout lands in one committed rev."""
    card = DataCard(
        id=doc.new_id(),
        kind=kind,
        position=position,
        size=size or default_size(kind),
        content=None,
        gen_state=GenState(GenStateName.waiting, QUEUED_BUBBLE),
        provenance=provenance,
    )
    return doc.add_data_card(card)


def check_transition(card: DataCard, to: GenStateName) -> None:
    frm = card.gen_state.state
    if (frm, to) not in LEGAL_TRANSITIONS:
        raise IllegalTransition(frm.value, to.value)


def apply_transition(
    doc: Document,
    card_id: str,
    to: GenStateName,
    bubble: Optional[str] = None,
    payload: Union[str, AssetRef, None] = None,
    truncated: bool = False,
) -> DataCard:
    """Validate and apply inside an already-open mutation."""
    card = doc.require_data(card_id)
    check_transition(card, to)
    if to == GenStateName.success:
        if card.kind == Modality.text:
            if not isinstance(payload, str):
                raise MissingPayload("text success requires the generated text")
            card.content = payload
            card.truncated = truncated
        else:
            if not isinstance(payload, AssetRef):
                raise MissingPayload(
                    f"{card.kind.value} success requires an asset reference"
                )
            card.content = payload
        card.gen_state = GenState(to, None)
    else:
        card.gen_state = GenState(to, clip_bubble(bubble))
    doc.touch_card(card_id)
    return card


def transition(
    doc: Document,
    card_id: str,
    to: GenStateName,
    bubble: Optional[str] = None,
    payload: Union[str, AssetRef, None] = None,
    truncated: bool = False,
) -> int:
    """One lifecycle step as its own committed mutation. Returns the new rev."""
    card = doc.require_data(card_id)
    check_transition(card, to)  # reject before the mutation opens
    with doc.mutate("transition"):
        apply_transition(doc, card_id, to, bubble, payload, truncated)
    return doc.rev


def update_bubble(doc: Document, card_id: str, bubble: Optional[str]) -> int:
    """Refresh the status bubble without changing state (progress messages)."""
    card = doc.require_data(card_id)
    with doc.mutate("transition") as mut:
        card.gen_state.bubble = clip_bubble(bubble)
        mut.touch_data(card_id)
    return doc.rev


def info_view(doc: Document, card_id: str) -> dict:
    """Read-only projection behind the Info View.

    Influencer ids deleted since the trigger stay listed, flagged dangling:
    provenance is a historical record, not a live reference.
    """
    card = doc.require_data(card_id)
    view: dict = {
        "id": card.id,
        "kind": card.kind.value,
        "created_at": ulid_created_at(card.id),
        "state": card.gen_state.state.value,
        "bubble": card.gen_state.bubble,
        "annotation": card.annotation,
        "truncated": card.truncated,
        "provenance": None,
    }
    if card.provenance is not None:
        view["provenance"] = {
            "method": card.provenance.method,
            "prompt": card.provenance.prompt,
            "job_id": card.provenance.job_id,
            "influencers": [
                {"id": inf, "dangling": doc.entity(inf) is None}
                for inf in card.provenance.influencers
            ],
        }
    return view

#!/usr/bin/env python3
"""Regenerate the shipped walkthrough session log and print its replay hash.

Drives a deterministic engine through the canonical scenario (goal card,
decompose, fill the empty slot, trigger), captures the client envelopes, and
writes them as a deckflow-log/1 file under src/deckflow/fixtures/.
"""

from __future__ import annotations

import sys
from pathlib import Path

from deckflow.docfile import log_entry, write_log
from deckflow.engine import Engine
from deckflow.replay import replay_log

GOAL = "Chinese style landscape, with traditional pavilion, soft and diffuse light"
WATER = "water elements, mountains"
OUT = Path(__file__).resolve().parent.parent / "src" / "deckflow" / "fixtures" / "walkthrough.log"


def main() -> int:
    engine = Engine(deterministic=True)
    entries = []
    seq = 0

    def step(kind: str, body: dict, doc_id: str = "doc-1") -> dict:
        nonlocal seq
        seq += 1
        envelope = {"msg_id": f"m{seq}", "kind": kind, "doc_id": doc_id, "body": body}
        entries.append(log_entry(engine.clock.now_iso(), envelope))
        result = engine.handle_client(envelope)
        if result.response["kind"] == "error":
            raise SystemExit(f"step {kind} failed: {result.response['body']}")
        return result.response

    step("join", {})
    goal_id = step(
        "create_card",
        {"card_type": "data", "kind": "text", "position": {"x": 80, "y": 80}, "content": GOAL},
    )["body"]["id"]
    action_id = step("decompose", {"card_id": goal_id})["body"]["action_id"]

    action = engine.get_doc("doc-1").action_cards[action_id]
    labels = [s.label for s in action.slots]
    empty = [s for s in action.slots if s.connection is None]
    assert labels == ["Style", "Subject", "Key Elements", "Lighting", "Natural Features"], labels
    assert len(empty) == 1 and empty[0].label == "Natural Features", labels

    water_id = step(
        "create_card",
        {"card_type": "data", "kind": "text", "position": {"x": 344, "y": 736}, "content": WATER},
    )["body"]["id"]
    step("connect", {"action_id": action_id, "slot_id": empty[0].slot_id, "source_id": water_id})
    triggered = step("trigger_action", {"action_id": action_id})["body"]
    assert len(triggered["prompt_card_ids"]) == 3 and len(triggered["output_card_ids"]) == 9

    write_log(OUT, "doc-1", entries)
    digest = replay_log(OUT)
    assert replay_log(OUT) == digest
    print(f"wrote {OUT} ({len(entries)} envelopes)")
    print(f"replay hash: {digest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Record authentic wire frames from the server for the client test suite.

Runs the walkthrough scene against an in-process server and saves every frame
the client would see, verbatim. The TypeScript tests hydrate from these, so
the client is always tested against the real protocol, never a hand-written
imitation of it.

Usage: python3 frontend/scripts/make_ui_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from deckflow.engine import Engine
from deckflow.server import create_app

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "frames.json"

GOAL = "Chinese style landscape, with traditional pavilion, soft and diffuse light"


def main() -> None:
    engine = Engine(store=None, deterministic=True)
    app = create_app(engine)
    frames: dict = {}
    msg_n = 0

    with TestClient(app) as tc:
        with tc.websocket_connect("/ws/client") as ws:

            def rpc(envelope_kind: str, **body) -> dict:
                nonlocal msg_n
                msg_n += 1
                ws.send_json(
                    {
                        "msg_id": f"m{msg_n}",
                        "kind": envelope_kind,
                        "doc_id": "doc-1",
                        "body": body,
                    }
                )
                return ws.receive_json()

            frames["snapshot_empty"] = rpc("join")

            frames["ack_create_goal"] = rpc(
                "create_card", kind="text", position={"x": 0, "y": 0}, content=GOAL
            )
            goal_id = frames["ack_create_goal"]["body"]["id"]
            frames["event_create_goal"] = ws.receive_json()

            frames["ack_decompose"] = rpc("decompose", card_id=goal_id)
            action_id = frames["ack_decompose"]["body"]["action_id"]
            frames["event_decompose"] = ws.receive_json()

            frames["ack_create_water"] = rpc(
                "create_card",
                kind="text",
                position={"x": 0, "y": 600},
                content="water elements, mountains",
            )
            water_id = frames["ack_create_water"]["body"]["id"]
            frames["event_create_water"] = ws.receive_json()

            action = next(
                a
                for a in frames["event_decompose"]["body"]["entities"]["action_cards"]
                if a["id"] == action_id
            )
            empty_slot = next(s for s in action["slots"] if s["connection"] is None)
            frames["ack_connect"] = rpc(
                "connect",
                action_id=action_id,
                slot_id=empty_slot["slot_id"],
                source_id=water_id,
            )
            frames["event_connect"] = ws.receive_json()

            # a rejected request, for the error path
            frames["error_frame"] = rpc(
                "connect", action_id=action_id, slot_id="s99", source_id=water_id
            )

            frames["ack_trigger"] = rpc("trigger_action", action_id=action_id)
            frames["event_trigger"] = ws.receive_json()

            # run the fanout through a real worker connection
            transitions = []
            with tc.websocket_connect("/ws/worker") as w:
                w.send_json(
                    {
                        "msg_id": "r1",
                        "kind": "register",
                        "body": {
                            "capabilities": ["GenerateImage"],
                            "loaded_models": ["mock-image"],
                        },
                    }
                )
                w.receive_json()  # registration ack
                for _ in range(9):
                    assign = w.receive_json()
                    job_id = assign["body"]["job_id"]
                    w.send_json(
                        {
                            "kind": "job_status",
                            "body": {"job_id": job_id, "seq": 1, "message": "painting"},
                        }
                    )
                    w.receive_json()
                    transitions.append(ws.receive_json())  # loading event
                    png = tc.put(
                        "/assets",
                        content=b"\x89PNG\r\n\x1a\n" + job_id.encode(),
                        headers={"content-type": "image/png"},
                    ).json()
                    w.send_json(
                        {
                            "kind": "job_result",
                            "body": {
                                "job_id": job_id,
                                "ok": True,
                                "asset_id": png["asset_id"],
                                "media_type": "image/png",
                            },
                        }
                    )
                    w.receive_json()
                    transitions.append(ws.receive_json())  # success event
            frames["events_generation"] = transitions

            # the full scene again, as a late joiner would get it
            frames["snapshot_full"] = rpc("join")

            # deleting an input leaves the outputs' provenance dangling
            frames["ack_delete"] = rpc("delete", entity_ids=[water_id])
            frames["event_delete"] = ws.receive_json()

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(frames, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    n_events = 5 + len(frames["events_generation"])
    print(f"wrote {OUT} ({n_events} events, final rev {frames['snapshot_full']['rev']})")


if __name__ == "__main__":
    main()

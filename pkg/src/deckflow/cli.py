"""Operator entry points: serve, worker, replay, export.

Exit codes: 0 ok, 2 config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import errno
import json
import logging
import socket
import sys
from pathlib import Path
from typing import Optional

from .adapters import AdapterSet, FixtureTable, load_adapter_specs, packaged_fixtures
from .docfile import CLIP_FORMAT, build_clipboard, canonical_json, save_document
from .errors import BadConfig, ConfigMissing, DeckFlowError, PortInUse
from .hub import JobType
from .replay import replay_log
from .store import DocumentStore
from .templates import TemplateStore

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_fixtures(path: Optional[str]) -> FixtureTable:
    if path is None:
        return packaged_fixtures()
    try:
        return FixtureTable.from_payload(json.loads(Path(path).read_text(encoding="utf-8")))
    except OSError as exc:
        raise BadConfig(f"cannot read fixtures {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise BadConfig(f"fixtures {path}: {exc}") from exc


def _build_adapters(config_path: Optional[str], fixtures: FixtureTable, asset_loader=None) -> AdapterSet:
    if config_path is None:
        return AdapterSet.mocks(fixtures)
    specs = load_adapter_specs(config_path)
    return AdapterSet.from_specs(specs, fixtures, asset_loader=asset_loader)


def _check_port(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(f"port {port} is already in use") from exc
        raise
    finally:
        probe.close()


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .engine import Engine
    from .server import create_app

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    store = DocumentStore(data_dir)
    fixtures = _load_fixtures(args.fixtures)
    adapters = _build_adapters(args.adapters, fixtures, asset_loader=store.assets.get)
    templates = TemplateStore(args.templates)
    templates.validate()
    engine = Engine(
        store=store,
        adapters=adapters,
        templates=templates,
        deterministic=args.deterministic,
    )
    _check_port(args.host, args.port)
    app = create_app(engine, record_path=args.record)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_worker(args: argparse.Namespace) -> int:
    from .worker import run_worker

    capabilities = []
    for name in (args.capabilities or "").split(","):
        name = name.strip()
        if not name:
            continue
        try:
            capabilities.append(JobType(name))
        except ValueError as exc:
            raise BadConfig(f"unknown capability {name!r}") from exc
    if not capabilities:
        raise BadConfig("worker needs --capabilities with at least one job type")
    fixtures = _load_fixtures(args.fixtures)
    adapters = _build_adapters(args.adapters, fixtures)
    run_worker(args.connect, adapters, capabilities)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    fixtures = _load_fixtures(args.fixtures)
    digest = replay_log(args.log, out_path=args.out, adapters=AdapterSet.mocks(fixtures))
    print(digest)
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    store = DocumentStore(Path(args.data_dir))
    doc = store.load(args.doc)
    out = Path(args.out) if args.out else Path(f"{args.doc}.{args.format}.json")
    if args.format == "doc":
        save_document(doc, out)
    else:
        ids = [s for s in (args.select or "").split(",") if s.strip()]
        if not ids:
            ids = (
                sorted(doc.data_cards)
                + sorted(doc.action_cards)
                + sorted(doc.clusters)
            )
        payload = build_clipboard(doc, ids, asset_loader=store.assets.get)
        assert payload["format"] == CLIP_FORMAT
        out.write_text(canonical_json(payload) + "\n", encoding="utf-8")
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deckflow", description="generative canvas server tools")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the gateway and job hub")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8700)
    serve.add_argument("--data-dir", default="./deckflow-data")
    serve.add_argument("--adapters", help="adapter config JSON (defaults to built-in mocks)")
    serve.add_argument("--templates", help="prompt template directory override")
    serve.add_argument("--fixtures", help="scripted mock responses JSON")
    serve.add_argument("--deterministic", action="store_true", help="fixed clock and replayable ids")
    serve.add_argument("--record", help="write client requests to this log file on shutdown")
    serve.set_defaults(func=cmd_serve)

    worker = sub.add_parser("worker", help="run a worker process")
    worker.add_argument("--connect", required=True, help="gateway worker websocket url")
    worker.add_argument("--adapters", help="adapter config JSON (defaults to built-in mocks)")
    worker.add_argument("--capabilities", required=True, help="comma-separated job types")
    worker.add_argument("--fixtures", help="scripted mock responses JSON")
    worker.set_defaults(func=cmd_worker)

    replay = sub.add_parser("replay", help="re-run a recorded session headlessly")
    replay.add_argument("--log", required=True)
    replay.add_argument("--out", help="also write the final document here")
    replay.add_argument("--fixtures", help="scripted mock responses JSON")
    replay.set_defaults(func=cmd_replay)

    export = sub.add_parser("export", help="write a document or clip file")
    export.add_argument("--doc", required=True)
    export.add_argument("--data-dir", default="./deckflow-data")
    export.add_argument("--format", choices=["doc", "clip"], default="doc")
    export.add_argument("--select", help="comma-separated entity ids (clip format)")
    export.add_argument("--out")
    export.set_defaults(func=cmd_export)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BadConfig, ConfigMissing, PortInUse) as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except DeckFlowError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

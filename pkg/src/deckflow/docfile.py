"""On-disk formats and canonical hashing.

Three formats, all JSON:

- ``deckflow-doc/1``: one document, media referenced by asset id.
- ``deckflow-clip/1``: a selection with media bytes inlined base64, so a
  clipboard survives crossing documents or machines.
- ``deckflow-log/1``: JSON lines; a header line, then one timestamped client
  request envelope per line.

Canonical form sorts object keys and entity collections by id, which makes
sha-256 over the encoded text usable as a structural fingerprint.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from .document import Document
from .errors import DocLoadFailure, LogFormatError, MalformedClipboard
from .model import AssetRef

DOC_FORMAT = "deckflow-doc/1"
CLIP_FORMAT = "deckflow-clip/1"
LOG_FORMAT = "deckflow-log/1"


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def document_payload(doc: Document) -> dict:
    payload = doc.to_dict()
    payload["format"] = DOC_FORMAT
    return payload


def document_hash(doc: Document) -> str:
    return hashlib.sha256(canonical_json(document_payload(doc)).encode("utf-8")).hexdigest()


def documents_equal(a: Document, b: Document) -> bool:
    return canonical_json(document_payload(a)) == canonical_json(document_payload(b))


def save_document(doc: Document, path: Union[str, Path]) -> None:
    Path(path).write_text(canonical_json(document_payload(doc)) + "\n", encoding="utf-8")


def parse_document(payload: dict, **kwargs) -> Document:
    if not isinstance(payload, dict) or payload.get("format") != DOC_FORMAT:
        raise DocLoadFailure(f"not a {DOC_FORMAT} payload")
    try:
        return Document.from_dict(payload, **kwargs)
    except (KeyError, TypeError, ValueError) as exc:
        raise DocLoadFailure(f"document payload is malformed: {exc}") from exc


def load_document(path: Union[str, Path], **kwargs) -> Document:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DocLoadFailure(f"cannot read document {path}: {exc}") from exc
    return parse_document(payload, **kwargs)


# -- clipboard ---------------------------------------------------------------


def build_clipboard(
    doc: Document,
    entity_ids: Iterable[str],
    asset_loader: Callable[[str], bytes],
) -> dict:
    """Serialize a selection with every referenced asset inlined."""
    payload = doc.selection_payload(entity_ids)
    payload["format"] = CLIP_FORMAT
    assets: dict[str, dict] = {}
    for card in payload["data_cards"]:
        content = card.get("content")
        if isinstance(content, dict):
            ref = AssetRef.from_dict(content)
            if ref.id not in assets:
                assets[ref.id] = {
                    "media_type": ref.media_type,
                    "data_base64": base64.b64encode(asset_loader(ref.id)).decode("ascii"),
                }
    payload["assets"] = assets
    return payload


def clipboard_assets(payload: dict) -> dict[str, bytes]:
    """Decode inlined assets; the caller stores them before pasting."""
    if not isinstance(payload, dict) or payload.get("format") != CLIP_FORMAT:
        raise MalformedClipboard(f"not a {CLIP_FORMAT} payload")
    out: dict[str, bytes] = {}
    for asset_id, entry in (payload.get("assets") or {}).items():
        try:
            out[asset_id] = base64.b64decode(entry["data_base64"], validate=True)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedClipboard(f"bad asset {asset_id!r} in clipboard: {exc}") from exc
    return out


# -- request log ---------------------------------------------------------------


def write_log(path: Union[str, Path], doc_id: str, entries: Iterable[dict]) -> None:
    """Write a replayable request log. Each entry: {"t": iso, "envelope": {...}}."""
    lines = [json.dumps({"format": LOG_FORMAT, "doc_id": doc_id}, sort_keys=True)]
    for entry in entries:
        lines.append(json.dumps(entry, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_log(path: Union[str, Path]) -> tuple[str, list[dict]]:
    """Return (doc_id, entries). Raises LogFormatError on any malformed line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise LogFormatError(f"cannot read log {path}: {exc}") from exc
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise LogFormatError("log file is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"log header is not JSON: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != LOG_FORMAT:
        raise LogFormatError(f"not a {LOG_FORMAT} log")
    doc_id = header.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise LogFormatError("log header is missing doc_id")
    entries: list[dict] = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"line {lineno} is not JSON: {exc}") from exc
        if not isinstance(entry, dict) or "envelope" not in entry:
            raise LogFormatError(f"line {lineno} has no envelope")
        envelope = entry["envelope"]
        if not isinstance(envelope, dict) or "kind" not in envelope:
            raise LogFormatError(f"line {lineno} envelope has no kind")
        entries.append(entry)
    return doc_id, entries


def log_entry(clock_iso: str, envelope: dict) -> dict:
    return {"t": clock_iso, "envelope": envelope}


__all__ = [
    "DOC_FORMAT",
    "CLIP_FORMAT",
    "LOG_FORMAT",
    "canonical_json",
    "document_payload",
    "document_hash",
    "documents_equal",
    "save_document",
    "parse_document",
    "load_document",
    "build_clipboard",
    "clipboard_assets",
    "write_log",
    "read_log",
    "log_entry",
]

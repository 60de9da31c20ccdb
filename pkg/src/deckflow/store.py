"""Durable state: one JSON file per document, an asset directory, and a
jobs file so a restart can requeue whatever was in flight."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

from .assets import AssetStore
from .docfile import canonical_json, document_payload, parse_document
from .document import Document
from .errors import DocNotFound, StorageFailure

JOBS_FILENAME = "jobs.json"


class DocumentStore:
    def __init__(self, data_dir: Union[str, Path], verify_reads: bool = False):
        self.data_dir = Path(data_dir)
        self.docs_dir = self.data_dir / "docs"
        self.docs_dir.mkdir(parents=True, exist_ok=True)
        self.assets = AssetStore(self.data_dir / "assets", verify_reads=verify_reads)

    def _doc_path(self, doc_id: str) -> Path:
        return self.docs_dir / f"{doc_id}.json"

    def _write_atomic(self, path: Path, text: str) -> None:
        try:
            fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(text)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageFailure(f"cannot write {path}: {exc}") from exc

    def save(self, doc: Document) -> None:
        self._write_atomic(self._doc_path(doc.doc_id), canonical_json(document_payload(doc)) + "\n")

    def load(self, doc_id: str, **kwargs) -> Document:
        path = self._doc_path(doc_id)
        if not path.is_file():
            raise DocNotFound(f"no document {doc_id!r}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc
        return parse_document(payload, **kwargs)

    def exists(self, doc_id: str) -> bool:
        return self._doc_path(doc_id).is_file()

    def list_docs(self) -> list[dict]:
        out = []
        for path in sorted(self.docs_dir.glob("*.json")):
            try:
                payload = json.loads(path.read_text(encoding="utf-8"))
                out.append(
                    {
                        "doc_id": payload["doc_id"],
                        "rev": payload["rev"],
                        "modified_at": payload["modified_at"],
                    }
                )
            except (OSError, json.JSONDecodeError, KeyError):
                continue  # skip unreadable files rather than fail the listing
        return out

    # -- job queue durability ---------------------------------------------

    def save_jobs(self, payload: dict) -> None:
        self._write_atomic(
            self.data_dir / JOBS_FILENAME,
            json.dumps(payload, sort_keys=True, indent=1) + "\n",
        )

    def load_jobs(self) -> Optional[dict]:
        path = self.data_dir / JOBS_FILENAME
        if not path.is_file():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc

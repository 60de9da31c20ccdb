"""Content-addressed media storage: id = sha-256 hex of the bytes.

Disk layout is one file per asset plus a small .meta sidecar for the MIME
type. Writes go through a temp file and rename, and callers store assets
before committing any document rev that references them, so a crash can
orphan an asset but never dangle a reference.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

from .errors import AssetCorrupt, AssetNotFound, AssetTooLarge, UnsupportedMediaType
from .model import AssetRef

DEFAULT_MAX_ASSET_BYTES = 32 * 1024 * 1024


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class AssetStore:
    def __init__(
        self,
        root: Optional[Union[str, Path]] = None,
        max_bytes: int = DEFAULT_MAX_ASSET_BYTES,
        verify_reads: bool = False,
    ):
        self.root = Path(root) if root else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
        self.max_bytes = max_bytes
        self.verify_reads = verify_reads
        self._mem: dict[str, tuple[bytes, str]] = {}

    def put(self, data: bytes, media_type: str) -> AssetRef:
        if not media_type:
            raise UnsupportedMediaType("media_type must be nonempty")
        if len(data) > self.max_bytes:
            raise AssetTooLarge(f"{len(data)} bytes exceeds the {self.max_bytes} byte cap")
        asset_id = sha256_hex(data)
        ref = AssetRef(id=asset_id, media_type=media_type, byte_length=len(data))
        if self.root is None:
            self._mem.setdefault(asset_id, (data, media_type))
            return ref
        path = self.root / asset_id
        if not path.exists():
            self._write_atomic(path, data)
            self._write_atomic(
                self.root / f"{asset_id}.meta",
                json.dumps({"media_type": media_type}).encode("utf-8"),
            )
        return ref

    def _write_atomic(self, path: Path, data: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=str(self.root), prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def get(self, asset_id: str) -> bytes:
        if self.root is None:
            entry = self._mem.get(asset_id)
            if entry is None:
                raise AssetNotFound(f"no asset {asset_id!r}")
            data = entry[0]
        else:
            path = self.root / asset_id
            if not path.is_file():
                raise AssetNotFound(f"no asset {asset_id!r}")
            data = path.read_bytes()
        if self.verify_reads and sha256_hex(data) != asset_id:
            raise AssetCorrupt(f"asset {asset_id!r} bytes do not match their id")
        return data

    def media_type(self, asset_id: str) -> str:
        if self.root is None:
            entry = self._mem.get(asset_id)
            if entry is None:
                raise AssetNotFound(f"no asset {asset_id!r}")
            return entry[1]
        meta = self.root / f"{asset_id}.meta"
        if not meta.is_file():
            raise AssetNotFound(f"no asset {asset_id!r}")
        return json.loads(meta.read_text(encoding="utf-8"))["media_type"]

    def exists(self, asset_id: str) -> bool:
        if self.root is None:
            return asset_id in self._mem
        return (self.root / asset_id).is_file()

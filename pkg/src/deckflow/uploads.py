"""Media sniffing for dropped or uploaded files."""

from __future__ import annotations

from pathlib import PurePosixPath

from .errors import UnsupportedMediaType
from .model import Modality

_EXTENSIONS = {
    ".png": ("image/png", Modality.image),
    ".jpg": ("image/jpeg", Modality.image),
    ".jpeg": ("image/jpeg", Modality.image),
    ".wav": ("audio/wav", Modality.audio),
    ".mp3": ("audio/mpeg", Modality.audio),
    ".txt": ("text/plain", Modality.text),
}


def sniff_media_type(data: bytes, filename: str) -> tuple[str, Modality]:
    """Magic bytes first, extension second; anything else is rejected."""
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return "image/png", Modality.image
    if data.startswith(b"\xff\xd8\xff"):
        return "image/jpeg", Modality.image
    if data[:4] == b"RIFF" and data[8:12] == b"WAVE":
        return "audio/wav", Modality.audio
    if data.startswith(b"ID3") or data[:2] in (b"\xff\xfb", b"\xff\xfa", b"\xff\xf3"):
        return "audio/mpeg", Modality.audio
    suffix = PurePosixPath(filename).suffix.lower()
    if suffix in _EXTENSIONS:
        return _EXTENSIONS[suffix]
    raise UnsupportedMediaType(f"cannot determine media type of {filename!r}")

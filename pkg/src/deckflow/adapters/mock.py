"""Deterministic stand-ins for the real model backends.

Every mock is a pure function of its inputs, and the media encoders avoid
compression entirely (stored deflate blocks, raw PCM) so outputs are
byte-identical across platforms and library versions. A FixtureTable lets
tests and demos script exact responses; anything unscripted falls back to a
rule-based string that is still deterministic.
"""

from __future__ import annotations

import io
import json
import math
import re
import struct
import wave
import zlib
from pathlib import Path
from typing import Optional, Union

from .fnv import fnv1a64

MOCK_IMAGE_SIDE = 256
MOCK_AUDIO_RATE = 16000
MOCK_AUDIO_SECONDS = 1.0
MOCK_AUDIO_AMPLITUDE = 0.5
EXPAND_SUFFIX = " , richly detailed, evocative"

TEMPLATE_COHERENT = "coherent_rewrite"
TEMPLATE_DECOMPOSE = "goal_decompose"
TEMPLATE_SHARED = "shared_features"
TEMPLATE_GENERATE = "generate"


def canonicalize(text: str) -> str:
    return " ".join(text.split())


def solid_png(r: int, g: int, b: int, side: int = MOCK_IMAGE_SIDE) -> bytes:
    """Truecolor PNG of one solid color, written without compression."""
    row = b"\x00" + bytes((r, g, b)) * side  # filter 0 per scanline
    raw = row * side
    stream = bytearray(b"\x78\x01")
    pos = 0
    while True:
        piece = raw[pos : pos + 65535]
        pos += len(piece)
        final = pos >= len(raw)
        stream += struct.pack("<BHH", 1 if final else 0, len(piece), len(piece) ^ 0xFFFF)
        stream += piece
        if final:
            break
    stream += struct.pack(">I", zlib.adler32(raw) & 0xFFFFFFFF)

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + tag
            + data
            + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", side, side, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", bytes(stream))
        + chunk(b"IEND", b"")
    )


def sine_wav(
    freq_hz: float,
    rate: int = MOCK_AUDIO_RATE,
    seconds: float = MOCK_AUDIO_SECONDS,
    amplitude: float = MOCK_AUDIO_AMPLITUDE,
) -> bytes:
    frames = bytearray()
    for n in range(int(rate * seconds)):
        v = int(round(amplitude * 32767.0 * math.sin(2.0 * math.pi * freq_hz * n / rate)))
        frames += struct.pack("<h", v)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(bytes(frames))
    return buf.getvalue()


def prompt_color(prompt: str) -> tuple[int, int, int]:
    h = fnv1a64(prompt)
    return ((h >> 56) & 0xFF, (h >> 48) & 0xFF, (h >> 40) & 0xFF)


def prompt_frequency(prompt: str) -> int:
    return 220 + (fnv1a64(prompt) % 440)


class FixtureTable:
    """Scripted responses, matched exactly after whitespace canonicalization."""

    def __init__(self) -> None:
        self._text: dict[str, str] = {}
        self._vision: dict[tuple[str, str], str] = {}
        self._expand: dict[str, str] = {}

    @staticmethod
    def _text_key(template: str, inputs: dict[str, str]) -> str:
        canon = {k: canonicalize(v) for k, v in inputs.items()}
        return template + "\x1f" + json.dumps(canon, sort_keys=True, ensure_ascii=False)

    def add_text(self, template: str, inputs: dict[str, str], response: str) -> None:
        self._text[self._text_key(template, inputs)] = response

    def add_vision(self, asset_id: str, label: str, response: str) -> None:
        self._vision[(asset_id, canonicalize(label))] = response

    def add_expand(self, prompt: str, response: str) -> None:
        self._expand[canonicalize(prompt)] = response

    def text(self, template: str, inputs: dict[str, str]) -> Optional[str]:
        return self._text.get(self._text_key(template, inputs))

    def vision(self, asset_id: str, label: str) -> Optional[str]:
        return self._vision.get((asset_id, canonicalize(label)))

    def expand(self, prompt: str) -> Optional[str]:
        return self._expand.get(canonicalize(prompt))

    @classmethod
    def from_payload(cls, payload: dict) -> FixtureTable:
        table = cls()
        for entry in payload.get("text", []):
            table.add_text(entry["template"], dict(entry["inputs"]), entry["response"])
        for entry in payload.get("vision", []):
            table.add_vision(entry["asset_id"], entry.get("label", ""), entry["response"])
        for entry in payload.get("expand", []):
            table.add_expand(entry["prompt"], entry["response"])
        return table

    @classmethod
    def load(cls, path: Union[str, Path]) -> FixtureTable:
        return cls.from_payload(json.loads(Path(path).read_text(encoding="utf-8")))


def truncate_tokens(text: str, max_tokens: Optional[int]) -> tuple[str, bool]:
    if max_tokens is None:
        return text, False
    tokens = text.split()
    if len(tokens) <= max_tokens:
        return text, False
    return " ".join(tokens[:max_tokens]), True


_NUMBERED = re.compile(r"^\s*\d+\.\s*")


class MockTextAdapter:
    model_name = "mock-text"

    def __init__(self, fixtures: Optional[FixtureTable] = None):
        self.fixtures = fixtures or FixtureTable()
        self.calls = 0

    def run(
        self,
        template: str,
        inputs: dict[str, str],
        max_tokens: Optional[int] = None,
        prompt: Optional[str] = None,
    ) -> tuple[str, bool]:
        # `prompt` is the rendered instruction a real backend would receive;
        # the mock keys on template + inputs so template edits don't break fixtures
        self.calls += 1
        scripted = self.fixtures.text(template, inputs)
        if scripted is None:
            scripted = self._fallback(template, inputs)
        return truncate_tokens(scripted, max_tokens)

    @staticmethod
    def _fallback(template: str, inputs: dict[str, str]) -> str:
        if template == TEMPLATE_COHERENT:
            return "Combined: " + inputs.get("concat", "")
        if template == TEMPLATE_DECOMPOSE:
            return "Subject :: " + inputs.get("goal", "")
        if template == TEMPLATE_SHARED:
            # use the descriptions themselves, not the numbering
            lines = [_NUMBERED.sub("", ln) for ln in inputs.get("items", "").splitlines()]
            words = " ".join(lines).split()
            return "shared: " + " ".join(words[:8])
        if template == TEMPLATE_GENERATE:
            return inputs.get("prompt", "")
        return inputs.get("prompt", "")

    def generate(self, prompt: str, max_tokens: Optional[int] = None) -> tuple[str, bool]:
        return self.run(TEMPLATE_GENERATE, {"prompt": prompt}, max_tokens)


class MockImageAdapter:
    model_name = "mock-image"
    media_type = "image/png"

    def __init__(self) -> None:
        self.calls = 0

    def generate(self, prompt: str, seed: int = 0, sample_index: int = 0) -> bytes:
        # pure in the prompt alone: the 3 samples of one row are identical
        self.calls += 1
        r, g, b = prompt_color(prompt)
        return solid_png(r, g, b)


class MockAudioAdapter:
    model_name = "mock-audio"
    media_type = "audio/wav"

    def __init__(self) -> None:
        self.calls = 0

    def generate(self, prompt: str, seed: int = 0, sample_index: int = 0) -> bytes:
        self.calls += 1
        return sine_wav(float(prompt_frequency(prompt)))


class MockVisionAdapter:
    model_name = "mock-vision"

    def __init__(self, fixtures: Optional[FixtureTable] = None):
        self.fixtures = fixtures or FixtureTable()
        self.calls = 0

    def describe(self, asset_id: str, label: str = "") -> str:
        self.calls += 1
        scripted = self.fixtures.vision(asset_id, label)
        if scripted is not None:
            return scripted
        return f"image {asset_id[:8]} described for '{label}'"


class MockExpandAdapter:
    model_name = "mock-expand"

    def __init__(self, fixtures: Optional[FixtureTable] = None):
        self.fixtures = fixtures or FixtureTable()
        self.calls = 0

    def expand(self, prompt: str) -> str:
        self.calls += 1
        scripted = self.fixtures.expand(prompt)
        if scripted is not None:
            return scripted
        return prompt + EXPAND_SUFFIX

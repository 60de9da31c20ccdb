"""Sortable 128-bit entity ids and the clock abstraction.

Ids follow the ULID layout: 48 bits of millisecond timestamp followed by 80
random bits, rendered as 26 chars of Crockford base32. Lexicographic order of
the strings therefore matches creation order. Replay and test runs swap in a
deterministic generator (counter timestamp, hash-derived randomness) so that
re-executing the same request sequence reproduces the same ids byte for byte.
"""

from __future__ import annotations

import hashlib
import secrets
import time
from datetime import datetime, timezone

CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
ULID_LEN = 26
_EPOCH_ISO = "2024-01-01T00:00:00+00:00"


def _encode_base32(value: int, length: int) -> str:
    chars = []
    for _ in range(length):
        chars.append(CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def _decode_base32(text: str) -> int:
    value = 0
    for ch in text:
        value = (value << 5) | CROCKFORD.index(ch)
    return value


def make_ulid(timestamp_ms: int, random80: int) -> str:
    if not 0 <= timestamp_ms < 1 << 48:
        raise ValueError("timestamp out of ULID range")
    if not 0 <= random80 < 1 << 80:
        raise ValueError("random component out of range")
    return _encode_base32((timestamp_ms << 80) | random80, ULID_LEN)


def ulid_timestamp_ms(ulid: str) -> int:
    """Millisecond timestamp embedded in the id."""
    if len(ulid) != ULID_LEN:
        raise ValueError(f"not a ULID: {ulid!r}")
    return _decode_base32(ulid) >> 80


def ulid_created_at(ulid: str) -> str:
    """ISO-8601 UTC creation time recovered from the id."""
    ts = ulid_timestamp_ms(ulid) / 1000.0
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


class IdGenerator:
    """Wall-clock ULIDs; monotonic within a process even at same-ms bursts."""

    def __init__(self):
        self._last_ms = -1
        self._last_random = 0

    def new_id(self) -> str:
        now_ms = time.time_ns() // 1_000_000
        if now_ms <= self._last_ms:
            # Same (or rewound) millisecond: bump the random part to keep order.
            self._last_random += 1
        else:
            self._last_ms = now_ms
            self._last_random = secrets.randbits(80)
        return make_ulid(self._last_ms, self._last_random & ((1 << 80) - 1))


class DeterministicIdGenerator:
    """Counter-based ULIDs seeded by a namespace; identical runs yield identical ids."""

    def __init__(self, namespace: str):
        self.namespace = namespace
        self._counter = 0

    def new_id(self) -> str:
        self._counter += 1
        digest = hashlib.sha256(f"{self.namespace}:{self._counter}".encode()).digest()
        random80 = int.from_bytes(digest[:10], "big")
        return make_ulid(self._counter, random80)


class Clock:
    """Real wall clock, millisecond-resolution ISO timestamps."""

    def now_iso(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class FixedClock:
    """Constant timestamp for deterministic replay and hashing."""

    def __init__(self, iso: str = _EPOCH_ISO):
        self._iso = iso

    def now_iso(self) -> str:
        return self._iso

"""The oracles themselves must be right before anything is judged against them."""

import hashlib

from oracles import fnv1a64_reference, sha256_reference, ulid_fields_reference, wav_spectral_peak_hz

# NIST FIPS 180-4 example vectors
SHA256_VECTORS = {
    b"": "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
    b"abc": "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
    b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq":
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1",
}

# values published with the FNV reference code
FNV1A64_VECTORS = {
    b"": 0xCBF29CE484222325,
    b"a": 0xAF63DC4C8601EC8C,
    b"foobar": 0x85944171F73967E8,
}


def test_sha256_reference_matches_nist_vectors():
    for data, want in SHA256_VECTORS.items():
        assert sha256_reference(data) == want


def test_sha256_reference_agrees_with_hashlib_on_odd_sizes():
    for size in (0, 1, 55, 56, 63, 64, 65, 1000):
        data = bytes(range(256)) * (size // 256 + 1)
        data = data[:size]
        assert sha256_reference(data) == hashlib.sha256(data).hexdigest()


def test_fnv1a64_reference_vectors():
    for data, want in FNV1A64_VECTORS.items():
        assert fnv1a64_reference(data) == want


def test_ulid_decoder_on_hand_built_id():
    # 26 zeros is timestamp 0 / random 0
    assert ulid_fields_reference("0" * 26) == (0, 0)
    # low 5 bits set -> last char is 'Z' in Crockford
    assert ulid_fields_reference("0" * 25 + "Z") == (0, 31)


def test_spectral_peak_on_synthetic_tone():
    import io
    import math
    import struct
    import wave

    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(8000)
        frames = b"".join(
            struct.pack("<h", int(0.4 * 32767 * math.sin(2 * math.pi * 440 * n / 8000)))
            for n in range(8000)
        )
        w.writeframes(frames)
    assert wav_spectral_peak_hz(buf.getvalue()) == 440

"""Keyed pseudorandomness for watermark embedding and verification.

Maps (key, m-token window, candidate token id) to a uniform float in (0, 1)
through SHA-256. The bit layout is fixed so that results are reproducible
bit-for-bit across runs, platforms, and languages:

* preimage = key bytes || window ids as 4-byte little-endian || id as 4-byte
  little-endian,
* the first 8 digest bytes are read big-endian and the top 53 bits kept,
* the float is (x53 + 0.5) / 2**53, which is strictly inside (0, 1).

The half-step offset rules out exact 0 and 1, so downstream logs and p-values
never hit the boundary.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

MAX_KEY_LEN = 64
_DENOM = float(1 << 53)


@dataclass(frozen=True)
class Key:
    """An opaque watermarking key of 1 to 64 bytes."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, (bytes, bytearray)):
            raise ValueError("key must be a byte string")
        if not 1 <= len(self.data) <= MAX_KEY_LEN:
            raise ValueError(f"key length must be in [1, {MAX_KEY_LEN}], got {len(self.data)}")
        object.__setattr__(self, "data", bytes(self.data))

    @classmethod
    def from_hex(cls, s: str) -> "Key":
        try:
            raw = bytes.fromhex(s)
        except ValueError as exc:
            raise ValueError(f"invalid hex key: {s!r}") from exc
        return cls(raw)

    def hex(self) -> str:
        return self.data.hex()


def _as_key(key) -> Key:
    if isinstance(key, Key):
        return key
    return Key(key)


def _digest_to_unit(digest: bytes) -> float:
    x53 = int.from_bytes(digest[:8], "big") >> 11
    return (x53 + 0.5) / _DENOM


def _window_prefix(key: Key, window) -> "hashlib._Hash":
    h = hashlib.sha256()
    h.update(key.data)
    ids = tuple(int(t) for t in window)
    for t in ids:
        if t < 0 or t >= 2**32:
            raise ValueError(f"window token id {t} outside the 4-byte range")
    h.update(struct.pack(f"<{len(ids)}I", *ids))
    return h


def prf_uniform(key, window, token_id: int) -> float:
    """Pseudorandom uniform in (0, 1) for one (key, window, token id) triple.

    Deterministic: identical inputs always give the identical float.
    """
    token_id = int(token_id)
    if token_id < 0 or token_id >= 2**32:
        raise ValueError(f"token id {token_id} outside the 4-byte range")
    h = _window_prefix(_as_key(key), window)
    h.update(struct.pack("<I", token_id))
    return _digest_to_unit(h.digest())


def prf_vector(key, window, vocab_size: int) -> np.ndarray:
    """Vector of pseudorandom uniforms, one per token id in [0, vocab_size).

    Element ``w`` equals ``prf_uniform(key, window, w)``.
    """
    vocab_size = int(vocab_size)
    if vocab_size < 2:
        raise ValueError(f"vocab size must be >= 2, got {vocab_size}")
    ids = tuple(int(t) for t in window)
    if ids and max(ids) >= vocab_size:
        raise ValueError("window contains token ids outside the vocabulary")
    base = _window_prefix(_as_key(key), ids)
    out = np.empty(vocab_size)
    pack = struct.Struct("<I").pack
    for w in range(vocab_size):
        h = base.copy()
        h.update(pack(w))
        out[w] = _digest_to_unit(h.digest())
    return out

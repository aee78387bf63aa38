"""Deterministic randomness for keys, blindings and encryption nonces.

A SHA-256 counter stream keyed by a seed string. Unlike ``random.Random``
the byte stream is identical across interpreter versions and platforms,
which the scenario golden files rely on.
"""

from __future__ import annotations

import hashlib


class Rng:
    """Seeded deterministic source of scalars and byte strings."""

    def __init__(self, seed: str | bytes):
        if isinstance(seed, str):
            seed = seed.encode()
        self._key = hashlib.sha256(seed).digest()
        self._counter = 0

    def child(self, label: str) -> "Rng":
        """Independent stream for a sub-purpose; order of use cannot collide."""
        return Rng(self._key + b"/" + label.encode())

    def bytes(self, k: int) -> bytes:
        out = bytearray()
        while len(out) < k:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            out.extend(block)
        return bytes(out[:k])

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound); 128 extra bits make the bias negligible."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        width = (bound.bit_length() + 7) // 8 + 16
        return int.from_bytes(self.bytes(width), "big") % bound

    def scalar(self, order: int) -> int:
        """Nonzero scalar in [1, order), suitable as a key or nonce."""
        return 1 + self.below(order - 1)

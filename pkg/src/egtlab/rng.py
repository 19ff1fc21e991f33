"""Counter-based random streams.

Every stochastic routine in the package takes an explicit
:class:`numpy.random.Generator`.  Streams handed out by :class:`SeedPolicy`
are Philox generators whose 128-bit key is a hash of
``(master_seed, experiment kind, sweep index, replicate index)``, so a work
item's randomness does not depend on which worker runs it or in what order.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

RngStream = np.random.Generator

_MASK64 = (1 << 64) - 1


def make_rng(seed: int | None = None) -> RngStream:
    """Convenience generator for interactive use and tests."""
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 128) - 1)))


def stream_key(master_seed: int, kind: str, sweep_index: int, replicate: int) -> int:
    """128-bit Philox key for one work item.

    The encoding is fixed-width little-endian, so the key is identical on
    every platform and Python version.
    """
    if not 0 <= master_seed <= _MASK64:
        raise ValueError("master_seed must fit in an unsigned 64-bit integer")
    if sweep_index < 0 or replicate < 0:
        raise ValueError("sweep and replicate indices must be non-negative")
    h = hashlib.blake2b(digest_size=16, person=b"egtlab-stream")
    h.update(struct.pack("<Q", master_seed))
    h.update(kind.encode("utf-8"))
    h.update(b"\x00")
    h.update(struct.pack("<QQ", sweep_index, replicate))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class SeedPolicy:
    master_seed: int
    kind: str

    def key(self, sweep_index: int, replicate: int) -> int:
        return stream_key(self.master_seed, self.kind, sweep_index, replicate)

    def stream(self, sweep_index: int, replicate: int) -> RngStream:
        return np.random.Generator(np.random.Philox(key=self.key(sweep_index, replicate)))


def spawn(rng: RngStream, n: int) -> list[RngStream]:
    """Child streams keyed by 128-bit draws from ``rng``.

    Consumes two 64-bit words of ``rng`` per child.
    """
    words = rng.integers(0, 1 << 64, size=(n, 2), dtype=np.uint64)
    return [
        np.random.Generator(np.random.Philox(key=int(lo) | (int(hi) << 64)))
        for lo, hi in words
    ]

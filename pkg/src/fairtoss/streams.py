"""Deterministic RNG substreams.

Every randomized component draws from a generator derived from
(seed, purpose label[, replication index]).  Purpose isolation keeps the
coin-toss stream identical across mechanisms run under the same seed, which
is what makes common-random-numbers comparisons and the zero-bonus
degeneracy check exact.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream", "label_key"]


def label_key(label: str) -> int:
    """Stable 32-bit key for a purpose label."""
    return zlib.crc32(label.encode("utf-8"))


def substream(seed: int, *labels: str, index: int | None = None) -> np.random.Generator:
    """Generator for (seed, labels..., index); same inputs, same stream."""
    key = tuple(label_key(label) for label in labels)
    if index is not None:
        key = key + (int(index),)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))

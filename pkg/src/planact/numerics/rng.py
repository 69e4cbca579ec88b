"""Seeded, counter-based randomness.

All stochastic call sites take an explicit Rng. Philox is counter-based,
so identical seed + identical call sequence gives identical outputs on
every platform. Child streams are derived with a splitmix64 hash so
parallel episodes stay independent and reproducible.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, *indices: int) -> int:
    """Stable 64-bit child seed from a master seed and index path."""
    x = master & _MASK64
    for idx in indices:
        x = (x + 0x9E3779B97F4A7C15 + (idx & _MASK64)) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = z ^ (z >> 31)
    return x


class Rng:
    """Explicit random stream (seed + draw counter)."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self.position = 0
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def spawn(self, index: int) -> "Rng":
        return Rng(derive_seed(self.seed, index))

    def normal(self, shape=(), dtype=np.float32) -> np.ndarray:
        self.position += 1
        return self._gen.standard_normal(size=shape).astype(dtype)

    def uniform(self, low=0.0, high=1.0, shape=()) -> np.ndarray:
        self.position += 1
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray | int:
        self.position += 1
        out = self._gen.integers(low, high, size=shape)
        return int(out) if shape is None else out

    def choice(self, options, size=None, replace=True):
        self.position += 1
        return self._gen.choice(options, size=size, replace=replace)

    def permutation(self, n_or_seq):
        self.position += 1
        return self._gen.permutation(n_or_seq)

    def shuffle_inplace(self, seq: list) -> None:
        self.position += 1
        self._gen.shuffle(seq)

    def __repr__(self):
        return f"Rng(seed={self.seed}, position={self.position})"

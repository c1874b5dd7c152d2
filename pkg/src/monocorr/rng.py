"""Seeded, splittable random streams.

Every Monte Carlo routine in the package takes an :class:`RngSeed` rather than
a live generator.  A seed names a reproducible family of streams: the base
stream is ``SeedSequence(seed, spawn_key=(stream,))`` and replicate ``i`` of
that stream is ``SeedSequence(seed, spawn_key=(stream, i))``, both feeding a
PCG64 bit generator.  PCG64 and SeedSequence are specified bit-for-bit by
NumPy, so draws do not depend on platform, thread count or evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_U64 = 2**64 - 1


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MAX_U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.stream < 0:
            raise ValueError("stream id must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Fresh generator for the base stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def replicate(self, index: int) -> np.random.Generator:
        """Fresh generator for replicate ``index``; independent of all others."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, index))
        return np.random.Generator(np.random.PCG64(ss))

    def with_stream(self, stream: int) -> "RngSeed":
        return RngSeed(self.seed, stream)


def as_seed(seed: "RngSeed | int") -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(int(seed))

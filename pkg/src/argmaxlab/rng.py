"""Per-replicate random streams.

Every replicate owns a generator derived only from ``(seed, replicate)`` so
replicates can be produced in any order or in parallel with identical output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    replicate: int = 0

    def __post_init__(self):
        if self.replicate < 0:
            raise ValueError("replicate index must be >= 0")

    def generator(self) -> np.random.Generator:
        return replicate_generator(self.seed, self.replicate)


def replicate_generator(seed: int, replicate: int, stream: int = 0) -> np.random.Generator:
    """Generator for one replicate; ``stream > 0`` gives further independent
    streams for the same replicate."""
    # SeedSequence hashes the entropy words through an avalanche mixer.
    words = [int(seed) & _MASK64, int(replicate)]
    if stream:
        words.append(int(stream))
    ss = np.random.SeedSequence(words)
    return np.random.Generator(np.random.SFC64(ss))

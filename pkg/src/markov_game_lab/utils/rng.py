# src/markov_game_lab/utils/rng.py
"""
Deterministic random streams.

Every draw in the lab comes from a counter-based Philox generator keyed by
(seed, experiment, stream). Per-episode generators are addressed by episode
index through the seed sequence's spawn key, so the draws of episode k never
depend on how many episodes (or runs) executed before it.
"""
import zlib
from dataclasses import dataclass

import numpy as np


def _crc(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


@dataclass(frozen=True)
class RngFactory:
    seed: int
    experiment: str = "default"

    def _entropy(self, stream: str) -> list[int]:
        return [int(self.seed), _crc(self.experiment), _crc(stream)]

    def generator(self, stream: str) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self._entropy(stream)))
        )

    def episode(self, stream: str, k: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self._entropy(stream), spawn_key=(int(k),))
        return np.random.Generator(np.random.Philox(sequence))

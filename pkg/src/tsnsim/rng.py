"""Named, independent random streams derived from one scenario seed."""

from __future__ import annotations

import numpy as np

STREAM_IDS = {"channel": 0, "mobility": 1, "traffic": 2, "phy": 3}


class RngStreams:
    def __init__(self, seed: int):
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.channel = self.stream("channel")
        self.mobility = self.stream("mobility")
        self.traffic = self.stream("traffic")
        self.phy = self.stream("phy")

    def stream(self, name: str, *sub: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(STREAM_IDS[name], *sub))
        return np.random.Generator(np.random.PCG64(ss))

    def flow(self, index: int) -> np.random.Generator:
        """Per-flow sub-stream of the traffic stream."""
        return self.stream("traffic", index)

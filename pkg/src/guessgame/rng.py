"""Seeded, splittable random streams.

A stream is the value (seed, name, counter); every draw keys a fresh Philox
generator on sha256(seed, name) with the counter as the block index, so the
same triple always reproduces the same draw. Streams split by name and never
share mutable state, which keeps whole runs a pure function of (config, seed).
"""

import hashlib

import numpy as np


class RngStream:
    __slots__ = ("seed", "name", "counter")

    def __init__(self, seed, name="root", counter=0):
        self.seed = int(seed)
        self.name = name
        self.counter = int(counter)

    def split(self, child):
        return RngStream(self.seed, f"{self.name}/{child}", 0)

    def _generator(self):
        # key per (seed, name, counter): distinct Philox keys give independent
        # streams, whereas counter offsets of +1 would overlap output blocks
        digest = hashlib.sha256(f"{self.seed}:{self.name}:{self.counter}".encode()).digest()
        key = np.frombuffer(digest[:16], dtype=np.uint64)
        self.counter += 1
        return np.random.Generator(np.random.Philox(key=key))

    def uniform(self, shape=None):
        g = self._generator()
        return g.random() if shape is None else g.random(shape)

    def gumbel(self, shape=None):
        g = self._generator()
        return g.gumbel(size=shape)

    def normal(self, shape=None):
        g = self._generator()
        return g.standard_normal(size=shape)

    def integer(self, low, high):
        """Uniform integer in [low, high)."""
        return int(self._generator().integers(low, high))

    def permutation(self, n):
        return self._generator().permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, name={self.name!r}, counter={self.counter})"

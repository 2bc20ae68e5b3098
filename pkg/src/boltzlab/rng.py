"""Named, independently seeded random substreams.

A stream seed is derived from ``(master seed, replica index, purpose tag)``::

    h    = fnv1a64(tag)
    seed = mix64(mix64(mix64(master) ^ replica) ^ h)

where ``mix64`` is the SplitMix64 finalizer (add the golden-ratio increment,
then three xor-shift-multiply rounds). Each seed initializes its own PCG64
generator, so every purpose tag consumes random numbers independently of
the others and two replicas never share a stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1

# purpose tags used by the simulator
INIT = "init"
ARRIVAL = "arrival"
PARTICLE = "particle"
PARTNER = "partner"
ANGLE = "angle"
ACCEPT = "accept"
MOLLIFY = "mollify"
BOOTSTRAP = "bootstrap"


def mix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def fnv1a64(text):
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def substream_seed(master, replica, tag):
    if master < 0 or replica < 0:
        raise ValueError("seeds and replica indices must be non-negative")
    return mix64(mix64(mix64(master & MASK64) ^ replica) ^ fnv1a64(tag))


@dataclass
class SeedLineage:
    """Random streams of one replica. ``events`` counts candidate arrivals consumed."""

    master: int
    replica: int = 0
    events: int = 0
    _streams: dict = field(default_factory=dict, init=False, repr=False)

    def stream(self, tag) -> np.random.Generator:
        if tag not in self._streams:
            self._streams[tag] = np.random.Generator(np.random.PCG64(substream_seed(self.master, self.replica, tag)))
        return self._streams[tag]

    def as_dict(self):
        return {"master": self.master, "replica": self.replica, "events": self.events}

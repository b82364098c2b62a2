"""Deterministic RNG substreams derived from a single master seed.

Every random draw in the package comes from a generator obtained through a
:class:`SeedTree` node, identified by the master seed plus a tuple of integer
keys. Two distinct keys yield statistically independent streams, and a node's
stream does not depend on the order in which sibling nodes are opened, so any
set of keyed draws can run concurrently (or be replayed in isolation) with
results identical to sequential execution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Top-level substream namespaces. Append new tags; renumbering existing ones
# changes every downstream draw and breaks manifest reproducibility.
STREAM_DATA = 0
STREAM_INIT = 1
STREAM_CHANNEL = 2
STREAM_BATCH = 3
STREAM_EVAL = 4
STREAM_PROBE = 5
STREAM_EPISODE = 6

SUBSTREAM_SCHEME = (
    "SeedSequence(master_seed, spawn_key=key); namespaces: "
    "data=0, init=1, channel=2, batch=3, eval=4, probe=5, episode=6"
)


@dataclass(frozen=True)
class SeedTree:
    """A node in the substream tree rooted at ``master``."""

    master: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> "SeedTree":
        return SeedTree(self.master, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(source: SeedTree | np.random.Generator | int) -> np.random.Generator:
    """Accept a seed, a SeedTree node, or an existing generator."""
    if isinstance(source, np.random.Generator):
        return source
    if isinstance(source, SeedTree):
        return source.generator()
    return SeedTree(int(source)).generator()

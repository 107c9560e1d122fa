"""Named, independent random substreams derived from a single root seed."""

import zlib

import numpy as np


def substream(seed, *names):
    """Return a Generator for the substream identified by ``names``.

    Every component (map generation, entry draws, snare triggers, policy
    sampling, training, per-episode streams, ...) derives its randomness from
    the root seed plus a stable name path, so runs are reproducible piecewise
    and parallel workers never share a stream.
    """
    keys = [np.uint32(seed & 0xFFFFFFFF), np.uint32((seed >> 32) & 0xFFFFFFFF)]
    for name in names:
        if isinstance(name, (int, np.integer)):
            keys.append(np.uint32(int(name) & 0xFFFFFFFF))
        else:
            keys.append(np.uint32(zlib.crc32(str(name).encode())))
    return np.random.default_rng(np.random.SeedSequence(keys))

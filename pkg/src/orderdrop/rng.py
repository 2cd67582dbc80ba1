"""Counter-based random streams keyed by (seed, round, client, step, purpose).

Every stochastic draw in the simulator comes from a stream derived from the
global seed plus a key path, so clients can run in any order or in parallel
and still see exactly the same numbers.
"""

import zlib

import numpy as np


def _key_word(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part)
    raise TypeError(f"stream key parts must be non-negative ints or strings, got {part!r}")


def stream(seed, *key):
    """Independent Philox generator for ``seed`` and the given key path.

    >>> a = stream(0, "select", 3).random()
    >>> a == stream(0, "select", 3).random()
    True
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_word(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))

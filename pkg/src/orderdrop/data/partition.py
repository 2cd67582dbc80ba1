"""Client partitioners returning per-client index arrays."""

import numpy as np

MAX_RESAMPLES = 10


def _size(data):
    return data if isinstance(data, (int, np.integer)) else len(data)


def partition_iid(data, num_clients, rng):
    """Random equal split; shard sizes differ by at most one."""
    n = _size(data)
    if not 1 <= num_clients <= n:
        raise ValueError(f"cannot split {n} samples among {num_clients} clients")
    return [np.sort(s) for s in np.array_split(rng.permutation(n), num_clients)]


def partition_label_skew(labels, num_clients, concentration, rng):
    """Per-client class mix drawn from a symmetric Dirichlet; disjoint and exhaustive.

    Each class's samples go to clients in proportion to that class's weight
    in each client's drawn mix. A draw leaving a client empty is redrawn, at
    most ``MAX_RESAMPLES`` times.
    """
    labels = np.asarray(getattr(labels, "targets", labels))
    if concentration <= 0:
        raise ValueError("concentration must be positive")
    classes = np.unique(labels)
    for _ in range(MAX_RESAMPLES + 1):
        mix = rng.dirichlet(np.full(len(classes), float(concentration)), size=num_clients)
        shards = [[] for _ in range(num_clients)]
        for j, c in enumerate(classes):
            idx = rng.permutation(np.flatnonzero(labels == c))
            w = mix[:, j] / mix[:, j].sum()
            cuts = np.round(np.cumsum(w) * len(idx)).astype(int)[:-1]
            for i, part in enumerate(np.split(idx, cuts)):
                shards[i].append(part)
        out = [np.sort(np.concatenate(s)) for s in shards]
        if all(len(s) for s in out):
            return out
    raise ValueError(f"a client received no samples after {MAX_RESAMPLES} resamples")

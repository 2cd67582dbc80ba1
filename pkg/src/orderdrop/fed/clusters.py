"""Device clusters, client assignment and per-round participant sampling."""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..rng import stream


@dataclass(frozen=True)
class DeviceCluster:
    id: int
    p_max: float
    share: float


@dataclass(frozen=True)
class ClientState:
    client_id: int
    cluster_id: int
    p_max: float
    indices: np.ndarray

    def __post_init__(self):
        if len(self.indices) < 1:
            raise ValueError(f"client {self.client_id} has an empty shard")

    @property
    def n(self):
        return len(self.indices)


def cluster_shares(n, drop_scale):
    """``drop_scale/n`` for each of the first n-1 clusters, the remainder for the top one."""
    if n < 1:
        raise ValueError("need at least one cluster")
    ds = Fraction(repr(float(drop_scale)))
    low = [ds / n] * (n - 1)
    top = 1 - sum(low, Fraction(0))
    shares = low + [top]
    if any(s <= 0 for s in shares):
        raise ValueError(f"drop scale {drop_scale} gives a nonpositive cluster share")
    return tuple(float(s) for s in shares)


def make_clusters(dist, drop_scale=1.0):
    """One cluster per candidate width, capped at that width."""
    shares = cluster_shares(len(dist.values), drop_scale)
    return tuple(DeviceCluster(i, p, s) for i, (p, s) in enumerate(zip(dist.values, shares)))


def quotas(num_clients, shares):
    """Largest-remainder rounding of ``shares * num_clients`` (ties to the lower index)."""
    exact = [Fraction(repr(float(s))) * num_clients for s in shares]
    counts = [int(e) for e in exact]
    order = sorted(range(len(shares)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: num_clients - sum(counts)]:
        counts[i] += 1
    return counts


def assign_clients(num_clients, clusters, rng):
    """Cluster id per client: exact quotas, then shuffled."""
    counts = quotas(num_clients, [c.share for c in clusters])
    ids = np.repeat([c.id for c in clusters], counts)
    return [int(i) for i in rng.permutation(ids)]


def build_clients(shards, clusters, seed):
    ids = assign_clients(len(shards), clusters, stream(seed, "assign"))
    by_id = {c.id: c for c in clusters}
    return [ClientState(i, cid, by_id[cid].p_max, np.asarray(s)) for i, (s, cid) in enumerate(zip(shards, ids))]


def select_participants(clients, fraction, seed, round_idx):
    """Sorted sample without replacement of round(fraction * N) clients (at least one)."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("participation fraction must lie in (0, 1]")
    n = len(clients)
    if n == 0:
        raise ValueError("no clients to select from")
    m = max(1, int(np.floor(fraction * n + 0.5)))
    pick = stream(seed, "select", round_idx).choice(n, size=m, replace=False)
    return [clients[i] for i in sorted(pick)]

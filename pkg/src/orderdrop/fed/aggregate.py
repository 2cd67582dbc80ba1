"""Segment-wise weighted averaging of client packets.

Each coordinate becomes the sample-count-weighted mean of the packets
that cover it; coordinates no packet covers keep their previous value.
With ordered packets this is exactly the per-segment rule over nested
widths: a coordinate in segment j is covered by every client whose cap
reaches s_j.
"""

import warnings

import numpy as np

from ..nn.network import NormStats


def aggregate(global_model, packets):
    """New global model from ``packets`` (processed in client-id order)."""
    new = global_model.copy()
    if not packets:
        warnings.warn("no client packets this round; global model left unchanged", RuntimeWarning, stacklevel=2)
        return new
    packets = sorted(packets, key=lambda pk: pk.client_id)
    for name, old in global_model.params.items():
        den = np.zeros(old.shape)
        for pk in packets:
            if name in pk.regions:
                den[pk.regions[name]] += pk.n
        if not den.any():
            continue
        acc = np.zeros(old.shape)
        for pk in packets:
            r = pk.regions.get(name)
            if r is not None:
                acc[r] += (pk.n / den[r]) * pk.weights[name]
        covered = den > 0
        new.params[name][covered] = acc[covered]
    _aggregate_stats(new, packets)
    return new


def _aggregate_stats(model, packets):
    for p, layers in model.norm_stats.items():
        holders = [pk for pk in packets if p in pk.norm_stats]
        if not holders:
            continue
        total = sum(pk.n for pk in holders)
        for i in layers:
            mean = sum((pk.n / total) * pk.norm_stats[p][i].mean for pk in holders)
            var = sum((pk.n / total) * pk.norm_stats[p][i].var for pk in holders)
            count = max(pk.norm_stats[p][i].count for pk in holders)
            layers[i] = NormStats(np.asarray(mean, dtype=np.float64), np.asarray(var, dtype=np.float64), count)

"""Shared oracles for the test suite."""

import numpy as np

from orderdrop.nn import Architecture, batchnorm, conv2d, dense, flatten, maxpool2d, relu


def numeric_grad(f, arr, h=1e-5):
    """Central finite differences of scalar ``f()`` w.r.t. every entry of ``arr`` (mutated in place)."""
    g = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + h
        fp = f()
        arr[idx] = old - h
        fm = f()
        arr[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b):
    """||a - b|| / (||a|| + ||b||); zero when both vanish."""
    den = np.linalg.norm(a) + np.linalg.norm(b)
    return 0.0 if den == 0 else float(np.linalg.norm(a - b) / den)


def dense_arch(n_in=4, hidden=(10, 6), n_out=3, bn=False):
    layers = []
    for w in hidden:
        layers.append(dense(w, bias=not bn))
        if bn:
            layers.append(batchnorm())
        layers.append(relu())
    layers.append(dense(n_out, od=False))
    return Architecture((n_in,), layers)


def conv_arch(bn=False, c_in=1, size=8, filters=(5,), n_out=3):
    layers = []
    for f in filters:
        layers.append(conv2d(f, 3, bias=not bn))
        if bn:
            layers.append(batchnorm())
        layers.append(relu())
    layers += [maxpool2d(2), flatten(), dense(n_out, od=False)]
    return Architecture((c_in, size, size), layers)


def random_arch(rng):
    """Small random dense or conv architecture with od-eligible hidden layers."""
    bn = bool(rng.integers(2))
    if rng.integers(2):
        hidden = tuple(int(w) for w in rng.integers(1, 13, size=rng.integers(1, 4)))
        return dense_arch(int(rng.integers(1, 7)), hidden, int(rng.integers(2, 6)), bn)
    filters = tuple(int(f) for f in rng.integers(1, 7, size=rng.integers(1, 3)))
    return conv_arch(bn, int(rng.integers(1, 3)), 9, filters, int(rng.integers(2, 5)))


def masked_copy(net, p):
    """Full-width copy with every unit outside the ordered p-prefix zeroed (incoming, outgoing, bias)."""
    from orderdrop.nn.layers import WEIGHTED, kept_units

    m = net.copy()
    prev_keep, spatial = None, 1
    for i, layer in enumerate(net.arch.layers):
        if layer.kind in WEIGHTED:
            W = m.params[f"{i}.weight"]
            if prev_keep is not None:
                W[:, prev_keep * spatial:] = 0.0
            if layer.od_eligible:
                k = kept_units(p, layer.width)
                W[k:] = 0.0
                if layer.bias:
                    m.params[f"{i}.bias"][k:] = 0.0
                prev_keep = k
            else:
                prev_keep = None
            spatial = 1
        elif layer.kind == "batchnorm" and prev_keep is not None:
            m.params[f"{i}.gamma"][prev_keep:] = 0.0
            m.params[f"{i}.beta"][prev_keep:] = 0.0
        elif layer.kind == "flatten":
            spatial = net.arch.spatial[i]
    return m


def random_packet(net, rng, client_id, p=None, masked=False):
    """UpdatePacket with random weights over a prefix plan (or a random unit mask)."""
    from orderdrop.fed import UpdatePacket
    from orderdrop.fed.local import random_units

    if p is None:
        p = float(rng.choice(net.widths))
    if masked:
        plan = net.masked_plan(random_units(net.arch, 1.0, p, rng))
    else:
        plan = net.plan(p)
    regions = net.regions(plan)
    weights = {k: rng.standard_normal(net.params[k][r].shape) for k, r in regions.items()}
    return UpdatePacket(client_id, p, int(rng.integers(1, 50)), weights, regions)


def brute_force_aggregate(net, packets):
    """Coordinate by coordinate: sum(n_i w_i) / sum(n_i) over the packets covering it."""
    out = {}
    for name, old in net.params.items():
        covered, full = [], []
        for pk in packets:
            if name not in pk.regions:
                continue
            mask = np.zeros(old.shape, bool)
            mask[pk.regions[name]] = True
            vals = np.zeros(old.shape)
            vals[pk.regions[name]] = pk.weights[name]
            covered.append(mask)
            full.append(vals)
        new = old.copy()
        for idx in np.ndindex(old.shape):
            num = den = 0.0
            for pk, mask, vals in zip([q for q in packets if name in q.regions], covered, full):
                if mask[idx]:
                    num += pk.n * float(vals[idx])
                    den += pk.n
            if den:
                new[idx] = num / den
        out[name] = new
    return out

"""Client-side local training for FjORD and the random-dropout baselines.

Every client trains a private full-shape copy of the global model and
ships back only the block of weights its plan covers, plus the
normalisation statistics of the widths it admits.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..distill import DistillConfig, distill_backward, teacher_width
from ..nn.layers import WEIGHTED, kept_units
from ..nn.network import backward
from ..nn.optim import OptimizerState, sgd_step
from ..od.distribution import sample_p_conditional
from ..rng import stream

BYTES_PER_VALUE = 8


@dataclass(frozen=True)
class LocalSpec:
    steps: int | None  # None: one pass over the shard
    batch_size: int
    lr: float
    momentum: float = 0.0

    def steps_for(self, n):
        steps = math.ceil(n / self.batch_size) if self.steps is None else self.steps
        if steps < 1:
            raise ValueError("local training needs at least one step (E >= 1)")
        return steps


@dataclass
class UpdatePacket:
    client_id: int
    p_max: float
    n: int
    weights: dict
    regions: dict
    norm_stats: dict = field(default_factory=dict)
    mask: dict | None = None
    widths_used: list = field(default_factory=list)

    @property
    def bytes_up(self):
        return BYTES_PER_VALUE * sum(w.size for w in self.weights.values())


def view_bytes(model, plan):
    return BYTES_PER_VALUE * sum(model.params[k][r].size for k, r in model.regions(plan).items())


def batch_indices(client, batch_size, seed, round_idx):
    """Endless shuffled mini-batches over the client's shard, reshuffled each pass."""
    rng = stream(seed, "batches", round_idx, client.client_id)
    while True:
        order = client.indices[rng.permutation(client.n)]
        for s in range(0, client.n, batch_size):
            yield order[s:s + batch_size]


def _packet(model, client, plan, widths, mask=None, used=()):
    regions = model.regions(plan)
    weights = {k: np.array(model.params[k][r], copy=True) for k, r in regions.items()}
    stats = {p: {i: s.copy() for i, s in model.norm_stats[p].items()} for p in widths}
    return UpdatePacket(client.client_id, client.p_max, client.n, weights, regions, stats, mask, list(used))


def _run(model, data, client, spec, seed, round_idx, step_fn):
    state = OptimizerState(lr=spec.lr, momentum=spec.momentum)
    batches = batch_indices(client, spec.batch_size, seed, round_idx)
    used = []
    for step in range(spec.steps_for(client.n)):
        idx = next(batches)
        _, grads, p = step_fn(model, data.inputs[idx], data.targets[idx], step)
        sgd_step(model.params, grads, state)
        used.append(p)
    return used


def local_train_fjord(client, global_model, data, dist, spec, seed, round_idx, kd=None):
    """Ordered-dropout local training: each step samples p <= p_max and trains F_p."""
    kd = kd or DistillConfig(enabled=False)
    model = global_model.copy()
    tw = teacher_width(dist, client.p_max)

    def step_fn(m, x, y, step):
        p = sample_p_conditional(dist, client.p_max, stream(seed, "width", round_idx, client.client_id, step))
        if kd.enabled:
            loss, g = distill_backward(m, x, y, p, tw, kd)
        else:
            loss, g = backward(m, x, y, p, "ce")
        return loss, g, p

    used = _run(model, data, client, spec, seed, round_idx, step_fn)
    admitted = [p for p in model.widths if p <= client.p_max + 1e-12]
    return _packet(model, client, model.plan(client.p_max), admitted, used=used)


def random_units(arch, pool_fraction, keep_ratio, rng):
    """Per od-eligible layer, a sorted random subset of the ordered ``pool_fraction`` prefix.

    The subset keeps ``ceil(keep_ratio * pool)`` of the ``pool`` candidate units.
    """
    units = {}
    for i, layer in enumerate(arch.layers):
        if layer.kind in WEIGHTED and layer.od_eligible:
            pool = kept_units(pool_fraction, layer.width)
            m = max(1, min(pool, math.ceil(keep_ratio * pool - 1e-9)))
            units[i] = np.sort(rng.choice(pool, size=m, replace=False))
    return units


def _train_plan(model, data, client, spec, seed, round_idx, plan):
    def step_fn(m, x, y, step):
        loss, g = backward(m, x, y, loss="ce", plan=plan)
        return loss, g, plan.width

    return _run(model, data, client, spec, seed, round_idx, step_fn)


def local_train_efd(client, global_model, data, q, spec, seed, round_idx):
    """Extended federated dropout towards target width ``q``.

    Clients that can run F_q train it as is; weaker ones train a random
    subnetwork of F_q scaled to their cap (mask chosen per client and round).
    """
    model = global_model.copy()
    key = model.width_key(q)
    if client.p_max >= key - 1e-12:
        plan = model.plan(key)
        used = _train_plan(model, data, client, spec, seed, round_idx, plan)
        return _packet(model, client, plan, [key], used=used)
    mask = random_units(model.arch, key, client.p_max / key, stream(seed, "mask", round_idx, client.client_id))
    plan = model.masked_plan(mask)
    used = _train_plan(model, data, client, spec, seed, round_idx, plan)
    return _packet(model, client, plan, [], mask=mask, used=used)


def local_train_fd(client, global_model, data, keep, spec, seed, round_idx):
    """Federated dropout: one random keep fraction of the full model for every client."""
    model = global_model.copy()
    if keep >= 1.0:
        plan = model.plan(model.widths[-1])
        used = _train_plan(model, data, client, spec, seed, round_idx, plan)
        return _packet(model, client, plan, [model.widths[-1]], used=used)
    mask = random_units(model.arch, 1.0, keep, stream(seed, "mask", round_idx, client.client_id))
    plan = model.masked_plan(mask)
    used = _train_plan(model, data, client, spec, seed, round_idx, plan)
    return _packet(model, client, plan, [], mask=mask, used=used)


def extension_units(arch, p_max, p_next, cap, rng):
    """Ordered p_max prefix plus a random ``floor(cap * segment)`` of the next tier's units."""
    units = {}
    for i, layer in enumerate(arch.layers):
        if layer.kind in WEIGHTED and layer.od_eligible:
            base, nxt = kept_units(p_max, layer.width), kept_units(p_next, layer.width)
            extra = int(math.floor(cap * (nxt - base) + 1e-9))
            picked = np.sort(rng.choice(np.arange(base, nxt), size=extra, replace=False)) if extra else np.array([], np.intp)
            units[i] = np.concatenate([np.arange(base), picked]).astype(np.intp)
    return units


def local_train_fjord_efd(client, global_model, data, dist, spec, seed, round_idx, cap=0.25):
    """FjORD whose top-width steps also touch a random slice of the next tier.

    Steps that sample p < p_max train F_p as usual; steps at p_max train
    the p_max prefix extended by at most ``cap`` of the next segment's units.
    """
    model = global_model.copy()
    higher = [v for v in dist.values if v > client.p_max + 1e-12]
    if not higher:
        return local_train_fjord(client, global_model, data, dist, spec, seed, round_idx)
    mask = extension_units(model.arch, client.p_max, higher[0], cap, stream(seed, "extend", round_idx, client.client_id))
    ext_plan = model.masked_plan(mask)

    def step_fn(m, x, y, step):
        p = sample_p_conditional(dist, client.p_max, stream(seed, "width", round_idx, client.client_id, step))
        if abs(p - client.p_max) <= 1e-12:
            loss, g = backward(m, x, y, loss="ce", plan=ext_plan)
        else:
            loss, g = backward(m, x, y, p, "ce")
        return loss, g, p

    used = _run(model, data, client, spec, seed, round_idx, step_fn)
    admitted = [p for p in model.widths if p < client.p_max - 1e-12]
    return _packet(model, client, ext_plan, admitted, mask=mask, used=used)

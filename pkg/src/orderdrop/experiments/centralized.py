"""Centralised comparison of ordered dropout against independently trained widths.

Arms (all share the same mini-batch order per seed):

* ``od``      one network, each step trains a width drawn from uniform-k
* ``od_kd``   as ``od`` with the full width distilling into the sampled one
* ``sm``      one separate network per width, trained at that width only
* ``sm1_rd``  the full-width ``sm`` model evaluated on random unit subsets
"""

import time

import numpy as np

from ..distill import DistillConfig, distill_backward
from ..fed.local import random_units
from ..fed.trace import MetricTrace
from ..nn.network import Network, backward, evaluate
from ..nn.optim import OptimizerState, sgd_step
from ..od.distribution import make_uniform_k, sample_p_conditional
from ..rng import stream
from .tasks import build_arch, load_task


def kd_config(cfg):
    k = cfg.kd
    return DistillConfig(k.alpha, k.temperature, k.teacher_backprop, True, k.form)


def epoch_batches(n, batch_size, seed, epoch):
    order = stream(seed, "central", "epoch", epoch).permutation(n)
    return [order[s:s + batch_size] for s in range(0, n, batch_size)]


def train_centralized(model, train, cfg, seed, width_fn, kd=None, steps=None, on_epoch=None):
    """SGD over ``cfg.optimizer.epochs`` epochs (or exactly ``steps`` steps).

    ``width_fn(step)`` gives the width trained at each step.
    """
    o = cfg.optimizer
    n_batches = -(-len(train) // o.batch_size)
    total = steps if steps is not None else o.epochs * n_batches
    state = OptimizerState(lr=o.lr, momentum=o.momentum, schedule=o.schedule, total_steps=total)
    teacher = model.widths[-1]
    step, epoch = 0, 0
    while step < total:
        for idx in epoch_batches(len(train), o.batch_size, seed, epoch):
            if step >= total:
                break
            x, y = train.inputs[idx], train.targets[idx]
            p = width_fn(step)
            if kd is not None:
                _, g = distill_backward(model, x, y, p, teacher, kd)
            else:
                _, g = backward(model, x, y, p, "ce")
            sgd_step(model.params, g, state)
            step += 1
        epoch += 1
        if on_epoch:
            on_epoch(epoch, model)
    return model


def sampled_width(dist, seed, tag):
    return lambda step: sample_p_conditional(dist, 1.0, stream(seed, "central", tag, step))


def eval_random_dropout(model, test, p, seed, draws):
    """Mean (accuracy, loss) of the full model restricted to random unit subsets of width p."""
    accs, losses = [], []
    for d in range(draws):
        units = random_units(model.arch, 1.0, p, stream(seed, "rd-eval", int(round(p * 1000)), d))
        plan = model.masked_plan(units, stats_key=model.widths[-1])
        acc, loss = evaluate(model, test.inputs, test.targets, plan=plan)
        accs.append(acc)
        losses.append(loss)
    return float(np.mean(accs)), float(np.mean(losses))


def run_centralized_seed(cfg, seed, train=None, test=None, log=None):
    """Train every configured arm for one seed. Returns {arm: MetricTrace}, {arm: model(s)}."""
    if train is None:
        train, test = load_task(cfg)
    arch = build_arch(cfg, train)
    dist = make_uniform_k(cfg.dropout.k)
    init = cfg.architecture.init
    arms = cfg.central.arms
    traces, models = {}, {}
    start = time.perf_counter()

    def ms():
        return int((time.perf_counter() - start) * 1000) if cfg.record_wallclock else 0

    def od_like(name, kd):
        net = Network(arch, dist.values, seed=seed, init=init)
        trace = MetricTrace()

        def on_epoch(e, m):
            for p in dist.values:
                acc, loss = evaluate(m, test.inputs, test.targets, p)
                trace.add(e, p, "test", acc, loss, 0, 0, ms())

        train_centralized(net, train, cfg, seed, sampled_width(dist, seed, name), kd, on_epoch=on_epoch)
        traces[name], models[name] = trace, net
        if log:
            log(f"seed {seed} {name}: " + " ".join(f"{p:g}:{a:.4f}" for p, a in trace.final().items()))

    if "od" in arms:
        od_like("od", None)
    if "od_kd" in arms:
        od_like("od_kd", kd_config(cfg))
    if "sm" in arms or "sm1_rd" in arms:
        trace = MetricTrace()
        sm_models = {}
        widths = dist.values if "sm" in arms else (dist.values[-1],)
        for p in widths:
            net = Network(arch.scaled(p), (1.0,), seed=seed, init=init)

            def on_epoch(e, m, p=p):
                acc, loss = evaluate(m, test.inputs, test.targets, 1.0)
                trace.add(e, p, "test", acc, loss, 0, 0, ms())

            train_centralized(net, train, cfg, seed, lambda step: 1.0, on_epoch=on_epoch)
            sm_models[p] = net
        if "sm" in arms:
            traces["sm"], models["sm"] = trace, sm_models
            if log:
                log(f"seed {seed} sm: " + " ".join(f"{p:g}:{a:.4f}" for p, a in trace.final().items()))
        if "sm1_rd" in arms:
            full = sm_models[dist.values[-1]]
            rd = MetricTrace()
            last = max(r["round"] for r in trace.rows)
            for p in dist.values:
                acc, loss = eval_random_dropout(full, test, p, seed, cfg.central.rd_draws)
                rd.add(last, p, "test", acc, loss, 0, 0, ms())
            traces["sm1_rd"] = rd
            if log:
                log(f"seed {seed} sm1_rd: " + " ".join(f"{p:g}:{a:.4f}" for p, a in rd.final().items()))
    return traces, models


def centralized_checks(stats, widths, gap=0.05, slack=0.01):
    """Mean OD accuracy within ``gap`` of SM at every width, and non-decreasing in p up to ``slack``."""
    od, sm = stats.get("od"), stats.get("sm")
    checks = {}
    if od and sm:
        gaps = {p: od[p]["mean"] - sm[p]["mean"] for p in widths}
        checks["od_vs_sm_gap"] = gaps
        checks["od_within_gap_of_sm"] = all(abs(g) <= gap + 1e-12 for g in gaps.values())
    if od:
        means = [od[p]["mean"] for p in widths]
        checks["od_non_decreasing"] = all(b >= a - slack - 1e-12 for a, b in zip(means, means[1:]))
    rd = stats.get("sm1_rd")
    if od and rd:
        checks["rd_minus_od_at_min_width"] = rd[widths[0]]["mean"] - od[widths[0]]["mean"]
    return checks


def run_centralized(cfg, log=None):
    """All arms for every seed. Returns (traces {arm: {seed: trace}}, summary, models)."""
    from .report import final_stats

    train, test = load_task(cfg)
    traces, models = {}, {}
    for seed in cfg.seeds:
        t, m = run_centralized_seed(cfg, seed, train, test, log)
        for arm in t:
            traces.setdefault(arm, {})[seed] = t[arm]
        for arm in m:
            models.setdefault(arm, {})[seed] = m[arm]
    stats = {arm: final_stats(by_seed) for arm, by_seed in traces.items()}
    widths = make_uniform_k(cfg.dropout.k).values
    summary = {"experiment": "central", "seeds": list(cfg.seeds), "arms": stats, "checks": centralized_checks(stats, widths)}
    return traces, summary, models

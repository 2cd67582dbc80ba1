"""Federated comparison: FjORD (with and without distillation) against eFD, FD and FjORD+eFD.

Each eFD target width needs its own training run, while one FjORD run
serves every width; the summary records both run counts. A centralised
OD run with the same number of SGD steps anchors the full-width accuracy,
and a second FjORD run under a skewed cluster population checks that
small widths hold up.
"""

import dataclasses

from ..distill import DistillConfig
from ..fed.simulation import FederatedConfig, make_clients, run_training
from ..fed.trace import MetricTrace
from ..nn.network import Network, evaluate
from ..od.distribution import make_uniform_k
from .centralized import kd_config, sampled_width, train_centralized
from .report import final_stats
from .tasks import build_arch, load_task


def fed_config(cfg, seed, method="fjord", kd=False, **overrides):
    f, o = cfg.federation, cfg.optimizer
    base = FederatedConfig(
        rounds=f.rounds,
        local_steps=f.local_steps,
        fraction=f.fraction,
        num_clients=f.num_clients,
        batch_size=o.batch_size,
        lr=o.lr,
        momentum=o.momentum,
        lr_schedule=tuple(tuple(x) for x in o.schedule),
        dist=make_uniform_k(cfg.dropout.k),
        drop_scale=f.drop_scale,
        kd=kd_config(cfg) if kd else DistillConfig(enabled=False),
        method=method,
        fd_keep=f.fd_keep,
        efd_cap=f.efd_cap,
        partition=f.partition,
        concentration=f.concentration,
        eval_every=f.eval_every,
        seed=seed,
        threads=cfg.threads,
        record_wallclock=cfg.record_wallclock,
    )
    return dataclasses.replace(base, **overrides)


def arm_specs(cfg):
    """(arm name, method, kd, overrides) for every configured method."""
    specs = []
    for m in cfg.federation.methods:
        if m == "fjord":
            specs.append(("fjord", "fjord", False, {}))
        elif m == "fjord_kd":
            specs.append(("fjord_kd", "fjord", True, {}))
        elif m == "efd":
            specs += [(f"efd_q{q:g}", "efd", False, {"target_width": q}) for q in cfg.federation.efd_widths]
        elif m == "fd":
            specs.append(("fd", "fd", False, {}))
        elif m == "fjord_efd":
            specs.append(("fjord_efd", "fjord_efd", False, {}))
        else:
            raise ValueError(f"unknown federated method {m!r}")
    return specs


def central_baseline(cfg, seed, train, test, arch, steps, kd):
    """Centralised OD with exactly ``steps`` SGD steps under the federated optimiser settings."""
    dist = make_uniform_k(cfg.dropout.k)
    net = Network(arch, dist.values, seed=seed, init=cfg.architecture.init)
    train_centralized(net, train, cfg, seed, sampled_width(dist, seed, "matched"), kd_config(cfg) if kd else None, steps=steps)
    trace = MetricTrace(meta={"local_steps": steps})
    for p in dist.values:
        acc, loss = evaluate(net, test.inputs, test.targets, p)
        trace.add(cfg.federation.rounds, p, "test", acc, loss, 0, 0, 0)
    return net, trace


def federated_checks(stats, widths, run_counts):
    checks = {"training_runs": run_counts}
    top = widths[-1]
    fj = stats.get("fjord_kd") or stats.get("fjord")
    fj_name = "fjord_kd" if "fjord_kd" in stats else "fjord"
    central = stats.get(f"central_{fj_name}")
    if fj and central:
        d = fj[top]["mean"] - central[top]["mean"]
        checks["fjord_minus_central_full_width"] = d
        checks["fjord_within_5pp_of_central"] = abs(d) <= 0.05 + 1e-12
    efd = {a: s for a, s in stats.items() if a.startswith("efd_q")}
    if fj and efd:
        best_arm, best = max(((a, next(iter(s.values()))["mean"]) for a, s in efd.items()), key=lambda t: t[1])
        checks["efd_best_arm"] = best_arm
        checks["efd_best_minus_fjord_full_width"] = best - fj[top]["mean"]
        checks["efd_best_within_2pp"] = best - fj[top]["mean"] <= 0.02 + 1e-12
    if fj:
        means = [fj[p]["mean"] for p in widths]
        checks["fjord_non_decreasing"] = all(b >= a - 0.01 - 1e-12 for a, b in zip(means, means[1:]))
    ds = {a: s for a, s in stats.items() if a.startswith(f"{fj_name}_ds")}
    if fj and ds:
        arm, s = next(iter(ds.items()))
        delta = fj[widths[0]]["mean"] - s[widths[0]]["mean"]
        checks["drop_scale_arm"] = arm
        checks["drop_scale_small_p_drop"] = delta
        checks["drop_scale_within_3pp"] = delta <= 0.03 + 1e-12
    return checks


def run_federated(cfg, log=None):
    train, test = load_task(cfg)
    arch = build_arch(cfg, train)
    dist = make_uniform_k(cfg.dropout.k)
    traces, models = {}, {}

    def record(arm, seed, model, trace):
        traces.setdefault(arm, {})[seed] = trace
        models.setdefault(arm, {})[seed] = model
        if log:
            log(f"seed {seed} {arm}: " + " ".join(f"{p:g}:{a:.4f}" for p, a in trace.final().items()))

    for seed in cfg.seeds:
        for arm, method, kd, over in arm_specs(cfg):
            fc = fed_config(cfg, seed, method, kd, **over)
            clients = make_clients(fc, train)
            model = Network(arch, dist.values, seed=seed, init=cfg.architecture.init)
            model, trace = run_training(fc, train, test, model, clients)
            record(arm, seed, model, trace)
            if method == "fjord" and cfg.federation.centralized_baseline:
                net, ctrace = central_baseline(cfg, seed, train, test, arch, trace.meta["local_steps"], kd)
                record(f"central_{arm}", seed, net, ctrace)
            ds = cfg.federation.compare_drop_scale
            if method == "fjord" and ds is not None and ds != cfg.federation.drop_scale:
                fc2 = dataclasses.replace(fc, drop_scale=ds)
                model2 = Network(arch, dist.values, seed=seed, init=cfg.architecture.init)
                model2, trace2 = run_training(fc2, train, test, model2, make_clients(fc2, train))
                record(f"{arm}_ds{ds:g}", seed, model2, trace2)
    stats = {arm: final_stats(by_seed) for arm, by_seed in traces.items()}
    run_counts = {"fjord": 1, "efd": len(cfg.federation.efd_widths) if "efd" in cfg.federation.methods else 0}
    summary = {
        "experiment": "federated",
        "seeds": list(cfg.seeds),
        "arms": stats,
        "local_steps": {arm: {s: t.meta.get("local_steps") for s, t in by.items()} for arm, by in traces.items()},
        "checks": federated_checks(stats, dist.values, run_counts),
    }
    return traces, summary, models

"""Report directory: config echo, per-arm metric traces, summary, checkpoints.

Layout::

    <out>/config.json
    <out>/summary.json
    <out>/arms/<arm>/seed<s>/metrics.csv
    <out>/checkpoints/<arm>[-p<width>]-seed<s>.ckpt
"""

import json
import os
import statistics

from ..nn import checkpoint


def final_stats(traces_by_seed):
    """p -> {'mean', 'stdev', 'values'} of last-round accuracy across seeds."""
    per_p = {}
    for seed in sorted(traces_by_seed):
        for p, acc in traces_by_seed[seed].final().items():
            per_p.setdefault(p, []).append(acc)
    out = {}
    for p in sorted(per_p):
        vals = per_p[p]
        out[p] = {"mean": statistics.fmean(vals), "stdev": statistics.stdev(vals) if len(vals) > 1 else 0.0, "values": vals}
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {(f"{k:g}" if isinstance(k, float) else str(k)): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def write_report(out, cfg, traces, summary, models=None):
    """``traces``: {arm: {seed: MetricTrace}}; ``models``: {arm: {seed: Network or {p: Network}}}."""
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w") as f:
        f.write(cfg.canonical_json())
    for arm, by_seed in traces.items():
        for seed, trace in by_seed.items():
            d = os.path.join(out, "arms", arm, f"seed{seed}")
            os.makedirs(d, exist_ok=True)
            trace.write(os.path.join(d, "metrics.csv"))
    with open(os.path.join(out, "summary.json"), "w") as f:
        json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
        f.write("\n")
    if models and cfg.checkpoints:
        cdir = os.path.join(out, "checkpoints")
        os.makedirs(cdir, exist_ok=True)
        for arm, by_seed in models.items():
            for seed, m in by_seed.items():
                if isinstance(m, dict):
                    for p, net in m.items():
                        checkpoint.save(net, os.path.join(cdir, f"{arm}-p{p:g}-seed{seed}.ckpt"))
                else:
                    checkpoint.save(m, os.path.join(cdir, f"{arm}-seed{seed}.ckpt"))

"""Ordered dropout on a two-layer linear net recovers the truncated SVD.

Inputs come uniformly from the unit ball, targets are ``A x``, and every
SGD step trains a width drawn from uniform-k. The p = b/k submodel should
approach the best rank-b approximation of ``A``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from ..data.synthetic import make_svd_matrix, sample_unit_ball
from ..nn.layers import Architecture, dense
from ..nn.network import Network, backward
from ..nn.optim import OptimizerState, sgd_step
from ..od.distribution import make_uniform_k, sample_p_conditional
from ..rng import stream
from .linalg import best_rank_approx

DIVERGENCE_LOSS = 1e6


class Divergence(ArithmeticError):
    def __init__(self, step, loss, trace):
        self.step, self.loss, self.trace = step, loss, trace
        super().__init__(f"loss {loss:.3g} exceeded {DIVERGENCE_LOSS:g} at step {step}")


@dataclass(frozen=True)
class SvdExperimentConfig:
    k: int = 5
    singular_values: tuple = (5.0, 4.0, 3.0, 2.0, 1.0)
    lr: float = 0.1
    steps: int = 10_000
    batch_size: int = 32
    record_every: int = 100
    loss: str = "sse"  # sse: mean over batch of squared norms; mse: mean over batch and outputs
    init: str = "normal"
    seed: int = 0

    def __post_init__(self):
        s = tuple(float(v) for v in self.singular_values)
        object.__setattr__(self, "singular_values", s)
        if len(s) != self.k:
            raise ValueError("need exactly k singular values")
        if s[-1] <= 0 or any(b >= a for a, b in zip(s, s[1:])):
            raise ValueError("singular values must be positive and strictly decreasing")
        if self.loss not in ("mse", "sse"):
            raise ValueError("loss must be 'mse' or 'sse'")

    def to_dict(self):
        d = asdict(self)
        d["singular_values"] = list(self.singular_values)
        return d


@dataclass
class SvdResult:
    config: SvdExperimentConfig
    A: np.ndarray
    trace: list  # (step, b, distance)
    final: dict  # b -> final distance
    initial: dict
    objective: float  # mean training loss over the last 500 steps
    objective_floor: float  # expected loss of the exact truncated-SVD solution

    def trace_for(self, b):
        return [(s, d) for s, bb, d in self.trace if bb == b]


def subnet_map(net, b):
    """Linear map of the width-b submodel: W2[:, :b] @ W1[:b]."""
    return net.params["1.weight"][:, :b] @ net.params["0.weight"][:b]


def distances(net, targets):
    return {b: float(np.linalg.norm(subnet_map(net, b) - Ab)) for b, Ab in targets.items()}


def run_svd_recovery(cfg=SvdExperimentConfig()):
    k = cfg.k
    A = make_svd_matrix(cfg.singular_values, stream(cfg.seed, "matrix"))
    targets = {b: best_rank_approx(A, b) for b in range(1, k + 1)}
    dist = make_uniform_k(k)
    arch = Architecture((k,), (dense(k, bias=False), dense(k, od=False, bias=False)))
    net = Network(arch, dist.values, seed=cfg.seed, init=cfg.init)
    state = OptimizerState(lr=cfg.lr)
    initial = distances(net, targets)
    trace = [(0, b, d) for b, d in initial.items()]
    losses = []
    for step in range(1, cfg.steps + 1):
        p = sample_p_conditional(dist, 1.0, stream(cfg.seed, "width", step))
        x = sample_unit_ball(k, cfg.batch_size, stream(cfg.seed, "batch", step))
        loss, g = backward(net, x, x @ A.T, p, cfg.loss)
        if loss > DIVERGENCE_LOSS:
            raise Divergence(step, loss, trace)
        sgd_step(net.params, g, state)
        losses.append(loss)
        if step % cfg.record_every == 0 or step == cfg.steps:
            trace += [(step, b, d) for b, d in distances(net, targets).items()]
    # E||(A_b - A) x||^2 over the unit ball is ||A_b - A||_F^2 / (k + 2)
    floor = sum(np.linalg.norm(targets[b] - A) ** 2 for b in targets) / (k * (k + 2))
    if cfg.loss == "mse":
        floor /= k
    final = {b: d for s, b, d in trace if s == cfg.steps}
    return SvdResult(cfg, A, trace, final, initial, float(np.mean(losses[-500:])), float(floor))


def smoothed(values, window):
    """Trailing moving average."""
    values = np.asarray(values, dtype=np.float64)
    c = np.cumsum(np.insert(values, 0, 0.0))
    out = np.empty_like(values)
    for i in range(len(values)):
        lo = max(0, i + 1 - window)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


def svd_config(cfg, seed):
    """SvdExperimentConfig from the ``svd`` section of an ExperimentConfig."""
    s = cfg.svd
    return SvdExperimentConfig(
        k=s.k,
        singular_values=s.singular_values,
        lr=s.lr,
        steps=s.steps,
        batch_size=s.batch_size,
        record_every=s.record_every,
        loss=s.loss,
        init=s.init,
        seed=seed,
    )


def run_svd_experiment(cfg, log=None):
    """Every seed of the SVD recovery run. Returns ({seed: SvdResult}, summary)."""
    results = {}
    for seed in cfg.seeds:
        r = run_svd_recovery(svd_config(cfg, seed))
        results[seed] = r
        if log:
            log(f"seed {seed}: " + " ".join(f"b={b}:{d:.4f}" for b, d in r.final.items()))
    thr = cfg.svd.threshold
    summary = {
        "experiment": "svd",
        "seeds": list(cfg.seeds),
        "threshold": thr,
        "final": {s: r.final for s, r in results.items()},
        "objective": {s: r.objective for s, r in results.items()},
        "objective_floor": {s: r.objective_floor for s, r in results.items()},
        "max_final_distance": max(d for r in results.values() for d in r.final.values()),
    }
    summary["recovered"] = summary["max_final_distance"] <= thr
    return results, summary


def write_svd_report(out, cfg, results, summary):
    """config.json, summary.json and seed<s>/trace.csv (step, b, distance)."""
    import json
    import os

    from .report import _jsonable

    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w") as f:
        f.write(cfg.canonical_json())
    for seed, r in results.items():
        d = os.path.join(out, f"seed{seed}")
        os.makedirs(d, exist_ok=True)
        with open(os.path.join(d, "trace.csv"), "w") as f:
            f.write("step,b,distance\n")
            f.writelines(f"{s},{b},{dist!r}\n" for s, b, dist in r.trace)
    with open(os.path.join(out, "summary.json"), "w") as f:
        json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
        f.write("\n")

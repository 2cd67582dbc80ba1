"""Round loop: select, broadcast, train locally, aggregate, evaluate."""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..data.partition import partition_iid, partition_label_skew
from ..distill import DistillConfig
from ..nn.network import evaluate
from ..nn.optim import scheduled_lr
from ..od.distribution import DropoutDistribution, make_uniform_k
from ..rng import stream
from .aggregate import aggregate
from .clusters import build_clients, make_clusters, select_participants
from .local import LocalSpec, local_train_efd, local_train_fd, local_train_fjord, local_train_fjord_efd
from .trace import MetricTrace

METHODS = ("fjord", "efd", "fd", "fjord_efd")


@dataclass(frozen=True)
class FederatedConfig:
    rounds: int = 200
    local_steps: int | None = None  # None: one local epoch
    fraction: float = 0.1
    num_clients: int = 100
    batch_size: int = 16
    lr: float = 0.1
    momentum: float = 0.0
    lr_schedule: tuple = ((0.5, 0.1), (0.75, 0.01))
    dist: DropoutDistribution = field(default_factory=lambda: make_uniform_k(5))
    drop_scale: float = 1.0
    kd: DistillConfig = field(default_factory=lambda: DistillConfig(enabled=False))
    method: str = "fjord"
    target_width: float = 1.0  # eFD target model
    fd_keep: float = 0.2
    efd_cap: float = 0.25
    partition: str = "iid"
    concentration: float = 0.5
    eval_every: int = 0  # 0: final round only
    seed: int = 0
    threads: int = 1
    record_wallclock: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.local_steps is not None and self.local_steps < 1:
            raise ValueError("local steps must be >= 1")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("participation fraction must lie in (0, 1]")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.partition not in ("iid", "label_skew"):
            raise ValueError("partition must be 'iid' or 'label_skew'")

    def eval_widths(self):
        if self.method == "efd":
            return (self.target_width,)
        if self.method == "fd":
            return (self.dist.values[-1],)
        return self.dist.values


def make_clients(cfg, train):
    if cfg.partition == "iid":
        shards = partition_iid(len(train), cfg.num_clients, stream(cfg.seed, "partition"))
    else:
        shards = partition_label_skew(train.targets, cfg.num_clients, cfg.concentration, stream(cfg.seed, "partition"))
    return build_clients(shards, make_clusters(cfg.dist, cfg.drop_scale), cfg.seed)


def _local(cfg, client, model, train, spec, t):
    if cfg.method == "fjord":
        return local_train_fjord(client, model, train, cfg.dist, spec, cfg.seed, t, cfg.kd)
    if cfg.method == "efd":
        return local_train_efd(client, model, train, cfg.target_width, spec, cfg.seed, t)
    if cfg.method == "fd":
        return local_train_fd(client, model, train, cfg.fd_keep, spec, cfg.seed, t)
    return local_train_fjord_efd(client, model, train, cfg.dist, spec, cfg.seed, t, cfg.efd_cap)


def evaluate_global(model, test, widths):
    """p -> (accuracy, loss) of each p-submodel with stored statistics."""
    return {p: evaluate(model, test.inputs, test.targets, p) for p in widths}


def run_training(cfg, train, test, model, clients=None, on_round=None):
    """Run ``cfg.rounds`` rounds; returns (final model, MetricTrace)."""
    clients = clients or make_clients(cfg, train)
    trace = MetricTrace()
    up = down = steps = 0
    start = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for t in range(cfg.rounds):
            lr = scheduled_lr(cfg.lr, cfg.lr_schedule, t, cfg.rounds)
            spec = LocalSpec(cfg.local_steps, cfg.batch_size, lr, cfg.momentum)
            chosen = select_participants(clients, cfg.fraction, cfg.seed, t)
            if pool is None:
                packets = [_local(cfg, c, model, train, spec, t) for c in chosen]
            else:
                packets = list(pool.map(lambda c: _local(cfg, c, model, train, spec, t), chosen))
            for pk in packets:
                steps += len(pk.widths_used)
                up += pk.bytes_up
                down += pk.bytes_up  # the client downloaded exactly the block it returns
            model = aggregate(model, packets)
            last = t == cfg.rounds - 1
            if last or (cfg.eval_every and (t + 1) % cfg.eval_every == 0):
                ms = int((time.perf_counter() - start) * 1000) if cfg.record_wallclock else 0
                for p, (acc, loss) in evaluate_global(model, test, cfg.eval_widths()).items():
                    trace.add(t + 1, p, "test", acc, loss, up, down, ms)
            if on_round:
                on_round(t, model)
    finally:
        if pool is not None:
            pool.shutdown()
    trace.meta.update(local_steps=steps, bytes_up=up, bytes_down=down)
    return model, trace

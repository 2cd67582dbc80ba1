"""SGD with (optional) momentum and a piecewise-constant step-size schedule."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    lr: float
    momentum: float = 0.0
    schedule: tuple = ()  # ((fraction of total, multiplier), ...)
    total_steps: int | None = None
    step: int = 0
    velocity: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        self.schedule = tuple(sorted((float(f), float(m)) for f, m in self.schedule))

    def current_lr(self):
        return scheduled_lr(self.lr, self.schedule, self.step, self.total_steps)


def scheduled_lr(base, schedule, step, total):
    """``base`` times the multiplier of the last milestone reached.

    >>> scheduled_lr(0.1, ((0.5, 0.1), (0.75, 0.01)), 60, 100)
    0.010000000000000002
    """
    if not schedule or not total:
        return base
    mult = 1.0
    for frac, m in schedule:
        if step >= frac * total:
            mult = m
    return base * mult


def sgd_step(params, grads, state):
    """In-place update: v <- m*v + g; w <- w - lr*v.

    Only the region each gradient reports as touched is updated, so
    parameters outside the trained submodel keep both their value and
    their velocity.
    """
    lr = state.current_lr()
    m = state.momentum
    regions = getattr(grads, "regions", {})
    for name, g in grads.items():
        w = params[name]
        if g.shape != w.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {w.shape}")
        region = regions.get(name)
        if region is None:
            region = (Ellipsis,)
        if m == 0.0:
            w[region] -= lr * g[region]
            continue
        v = state.velocity.get(name)
        if v is None:
            v = state.velocity[name] = np.zeros_like(w)
        v[region] = m * v[region] + g[region]
        w[region] -= lr * v[region]
    state.step += 1
    return params

"""Nested p-submodels: zero-copy views, standalone materialisation, write-back."""

from dataclasses import dataclass

import numpy as np

from ..nn.layers import WEIGHTED
from ..nn.network import Network, Plan, forward_cached


@dataclass(frozen=True)
class SubmodelView:
    """Read-only window onto the first ``ceil(p*K_l)`` units of each eligible layer."""

    model: Network
    p: float
    plan: Plan

    @property
    def kept(self):
        """Per-layer kept unit count for weight layers, ``None`` elsewhere."""
        out = []
        for layer, sel in zip(self.model.arch.layers, self.plan.out_sel):
            out.append(sel.stop if layer.kind in WEIGHTED else None)
        return tuple(out)

    def kept_indices(self):
        """Layer index -> kept unit indices, for every weight layer."""
        return {i: range(k) for i, k in enumerate(self.kept) if k is not None}

    def regions(self):
        return self.model.regions(self.plan)

    def weights(self):
        """Parameter name -> numpy view of the live block (no copies)."""
        return {name: self.model.params[name][r] for name, r in self.regions().items()}

    def param_count(self):
        return int(sum(w.size for w in self.weights().values()))

    def forward(self, x, train=False):
        return forward_cached(self.model, x, self.plan, train)[0]


def extract_submodel(model, p):
    if not 0.0 < p <= 1.0:
        raise ValueError(f"width fraction must lie in (0, 1], got {p}")
    return SubmodelView(model, float(p), model.prefix_plan(p))


def materialize_submodel(view):
    """Standalone, physically smaller network computing the same function."""
    src = view.model
    arch = src.arch.scaled(view.p)
    params = {name: np.array(w, dtype=np.float64, copy=True) for name, w in view.weights().items()}
    stats = None
    if view.plan.stats_key is not None:
        stats = {1.0: {i: st.copy() for i, st in src.norm_stats[view.plan.stats_key].items()}}
    return Network(arch, (1.0,), params=params, norm_stats=stats)


def write_back(view, weights):
    """Copy ``weights`` (shaped like ``view.weights()``) into the source model in place."""
    regions = view.regions()
    if set(weights) - set(regions):
        raise ValueError(f"unknown parameters: {sorted(set(weights) - set(regions))}")
    for name, region in regions.items():
        if name not in weights:
            continue
        target = view.model.params[name]
        w = np.asarray(weights[name], dtype=np.float64)
        if w.shape != target[region].shape:
            raise ValueError(f"{name}: got shape {w.shape}, view expects {target[region].shape}")
        target[region] = w

"""Deterministic float64 network engine with width-restricted forward/backward.

A :class:`Network` owns full-width parameters. Every forward pass runs
through a :class:`Plan` that names, for each layer, which output units are
live: an ordered prefix ``slice(0, ceil(p*K))`` for ordered-dropout widths,
or an index array for random-dropout baselines. Dropped units are never
computed; their gradients come back as exact zeros.
"""

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..rng import stream
from . import losses
from .layers import WEIGHTED, Architecture, block, expand_sel, is_prefix, kept_units

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
WIDTH_TOL = 1e-9


class NonFiniteError(ArithmeticError):
    """A NaN/Inf showed up at a layer boundary."""

    def __init__(self, layer, kind, where="activation"):
        self.layer = layer
        self.kind = kind
        self.where = where
        super().__init__(f"non-finite {where} at layer {layer} ({kind})")


class WidthError(ValueError):
    pass


@dataclass
class NormStats:
    mean: np.ndarray
    var: np.ndarray
    count: int = 0

    def copy(self):
        return NormStats(self.mean.copy(), self.var.copy(), self.count)


@dataclass(frozen=True)
class Plan:
    out_sel: tuple
    stats_key: float | None
    width: float | None = None


class Gradients(dict):
    """Full-shape gradient arrays keyed by parameter name.

    ``regions`` records, per parameter, the index block that the pass
    touched; everything outside it is exactly zero. ``None`` means the
    whole array.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.regions = {}

    def put(self, name, shape, value, region):
        full = np.zeros(shape, dtype=np.float64)
        full[region] = value
        self[name] = full
        self.regions[name] = region

    def __add__(self, other):
        out = Gradients()
        for name in list(self) + [n for n in other if n not in self]:
            if name in self and name in other:
                out[name] = self[name] + other[name]
                out.regions[name] = _union_region(self.regions.get(name), other.regions.get(name))
            else:
                src = self if name in self else other
                out[name] = src[name].copy()
                out.regions[name] = src.regions.get(name)
        return out

    def scaled(self, factor):
        out = Gradients({k: v * factor for k, v in self.items()})
        out.regions = dict(self.regions)
        return out


def _union_region(a, b):
    if a is None or b is None:
        return None
    if all(isinstance(s, slice) for s in a) and all(isinstance(s, slice) for s in b) and len(a) == len(b):
        return tuple(slice(0, max(x.stop, y.stop)) for x, y in zip(a, b))
    return None


class Network:
    """Parameters, architecture and per-width normalisation statistics."""

    def __init__(self, arch, widths=(1.0,), seed=0, init="uniform", params=None, norm_stats=None):
        if not isinstance(arch, Architecture):
            raise TypeError("arch must be an Architecture")
        widths = tuple(float(w) for w in widths)
        if not widths or any(not 0.0 < w <= 1.0 for w in widths) or list(widths) != sorted(set(widths)):
            raise ValueError("widths must be strictly increasing values in (0, 1]")
        self.arch = arch
        self.widths = widths
        shapes = arch.param_shapes()
        if params is None:
            params = _init_params(arch, seed, init)
        else:
            params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
            if set(params) != set(shapes):
                raise ValueError("parameter names do not match the architecture")
            for k, s in shapes.items():
                if params[k].shape != s:
                    raise ValueError(f"parameter {k} has shape {params[k].shape}, expected {s}")
        self.params = {k: params[k] for k in shapes}
        if norm_stats is None:
            norm_stats = {w: self._fresh_stats(w) for w in widths}
        elif set(norm_stats) != set(widths):
            raise ValueError("normalisation statistics must be keyed by exactly the widths")
        self.norm_stats = norm_stats

    # -- width bookkeeping -------------------------------------------------
    def _fresh_stats(self, p):
        out = {}
        for i in self.arch.batchnorm_layers():
            k = self._prefix_sels(p)[i].stop
            out[i] = NormStats(np.zeros(k), np.ones(k), 0)
        return out

    def width_key(self, p):
        for w in self.widths:
            if abs(w - p) <= WIDTH_TOL:
                return w
        raise WidthError(f"width {p} is not one of the model's widths {self.widths}")

    def _prefix_sels(self, p):
        sels = []
        cur = slice(0, self.arch.input_shape[0])
        for i, layer in enumerate(self.arch.layers):
            if layer.kind in WEIGHTED:
                cur = slice(0, kept_units(p, layer.width) if layer.od_eligible else layer.width)
            elif layer.kind == "flatten":
                cur = expand_sel(cur, self.arch.spatial[i])
            sels.append(cur)
        return tuple(sels)

    def plan(self, p):
        """Ordered-dropout plan for width ``p`` (must be one of ``widths``)."""
        key = self.width_key(p)
        return Plan(self._prefix_sels(key), key, key)

    def prefix_plan(self, p):
        """Prefix plan for any ``p`` in (0, 1]; normalisation stats only if ``p`` is a width."""
        try:
            key = self.width_key(p)
        except WidthError:
            return Plan(self._prefix_sels(p), None, p)
        return Plan(self._prefix_sels(key), key, key)

    def masked_plan(self, units, stats_key=None):
        """Plan keeping ``units[i]`` (sorted indices) of each od-eligible layer ``i``.

        Layers missing from ``units`` keep their full width.
        """
        sels = []
        cur = slice(0, self.arch.input_shape[0])
        for i, layer in enumerate(self.arch.layers):
            if layer.kind in WEIGHTED:
                if i in units:
                    if not layer.od_eligible:
                        raise ValueError(f"layer {i} is not od-eligible")
                    idx = np.asarray(units[i], dtype=np.intp)
                    cur = idx if len(idx) != idx[-1] + 1 else slice(0, len(idx))
                else:
                    cur = slice(0, layer.width)
            elif layer.kind == "flatten":
                cur = expand_sel(cur, self.arch.spatial[i])
            sels.append(cur)
        if stats_key is not None:
            stats_key = self.width_key(stats_key)
        return Plan(tuple(sels), stats_key, None)

    def regions(self, plan):
        """Parameter name -> index block live under ``plan``."""
        regs = {}
        in_sel = slice(0, self.arch.input_shape[0])
        for i, layer in enumerate(self.arch.layers):
            o = plan.out_sel[i]
            if layer.kind in WEIGHTED:
                regs[f"{i}.weight"] = block(o, in_sel)
                if layer.bias:
                    regs[f"{i}.bias"] = (o,)
            elif layer.kind == "batchnorm":
                regs[f"{i}.gamma"] = (o,)
                regs[f"{i}.beta"] = (o,)
            in_sel = o
        return regs

    def param_count(self, p=1.0):
        regs = self.regions(self.prefix_plan(p))
        return int(sum(self.params[k][r].size for k, r in regs.items()))

    def copy(self):
        return Network(
            self.arch,
            self.widths,
            params={k: v.copy() for k, v in self.params.items()},
            norm_stats={w: {i: s.copy() for i, s in st.items()} for w, st in self.norm_stats.items()},
        )

    # -- compute -----------------------------------------------------------
    def forward(self, x, p=1.0, train=False, plan=None):
        return forward(self, x, p, "train" if train else "eval", plan=plan)


def _init_params(arch, seed, init):
    rng = stream(seed, "init")
    shapes = arch.param_shapes()
    params = {}
    for name, shape in shapes.items():
        i, kind = name.split(".")
        if kind == "gamma":
            params[name] = np.ones(shape)
        elif kind == "beta":
            params[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shapes[f"{i}.weight"][1:]))
            if init == "normal":
                params[name] = rng.standard_normal(shape)
            elif init == "uniform":
                bound = 1.0 / np.sqrt(fan_in)
                params[name] = rng.uniform(-bound, bound, size=shape)
            else:
                raise ValueError(f"unknown init scheme {init!r}")
    return params


def check_batch(net, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != len(net.arch.input_shape) + 1 or x.shape[1:] != net.arch.input_shape:
        raise ValueError(f"batch shape {x.shape} does not match input shape {net.arch.input_shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(-1, "input")
    return x


def _bn_forward(net, i, a, sel, plan, train):
    gamma = net.params[f"{i}.gamma"][sel]
    beta = net.params[f"{i}.beta"][sel]
    axes = (0,) if a.ndim == 2 else (0, 2, 3)
    shape = (1, -1) if a.ndim == 2 else (1, -1, 1, 1)
    if train:
        mu = a.mean(axis=axes)
        var = a.var(axis=axes)
        if plan.stats_key is not None:
            st = net.norm_stats[plan.stats_key][i]
            m = a.size // a.shape[1]
            unbiased = var * m / (m - 1) if m > 1 else var
            st.mean[sel] = (1.0 - BN_MOMENTUM) * st.mean[sel] + BN_MOMENTUM * mu
            st.var[sel] = (1.0 - BN_MOMENTUM) * st.var[sel] + BN_MOMENTUM * unbiased
            st.count += 1
    else:
        if plan.stats_key is None:
            raise WidthError("eval-mode normalisation needs statistics for this width")
        st = net.norm_stats[plan.stats_key][i]
        mu, var = st.mean[sel], st.var[sel]
    invstd = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (a - mu.reshape(shape)) * invstd.reshape(shape)
    return gamma.reshape(shape) * xhat + beta.reshape(shape), (xhat, invstd, gamma, axes, shape, train)


def _bn_backward(dz, cache):
    xhat, invstd, gamma, axes, shape, train = cache
    dgamma = (dz * xhat).sum(axis=axes)
    dbeta = dz.sum(axis=axes)
    dxhat = dz * gamma.reshape(shape)
    if not train:
        return dxhat * invstd.reshape(shape), dgamma, dbeta
    m = dz.size // dz.shape[1]
    dx = (
        invstd.reshape(shape)
        / m
        * (m * dxhat - dxhat.sum(axis=axes, keepdims=True) - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True))
    )
    return dx, dgamma, dbeta


def forward_cached(net, x, plan, train):
    """Run ``plan`` on batch ``x``; returns (logits, caches for backward)."""
    a = check_batch(net, x)
    params = net.params
    in_sel = slice(0, net.arch.input_shape[0])
    caches = []
    for i, layer in enumerate(net.arch.layers):
        o = plan.out_sel[i]
        kind = layer.kind
        cache = None
        if kind == "dense":
            W = params[f"{i}.weight"][block(o, in_sel)]
            z = a @ W.T
            if layer.bias:
                z += params[f"{i}.bias"][o]
            cache = (a, W)
        elif kind == "conv2d":
            k = layer.kernel
            W = params[f"{i}.weight"][block(o, in_sel)]
            n, _, h, w = a.shape
            cols = kernels.im2col(a, k, k)
            Wm = W.reshape(W.shape[0], -1)
            z2 = cols @ Wm.T
            if layer.bias:
                z2 += params[f"{i}.bias"][o]
            z = np.ascontiguousarray(z2.reshape(n, h - k + 1, w - k + 1, -1).transpose(0, 3, 1, 2))
            cache = (cols, Wm, a.shape, W.shape)
        elif kind == "relu":
            cache = a > 0
            z = np.maximum(a, 0.0)
        elif kind == "maxpool2d":
            z, arg = kernels.maxpool_forward(a, layer.kernel)
            cache = (arg, a.shape)
        elif kind == "flatten":
            z = a.reshape(a.shape[0], -1)
            cache = a.shape
        elif kind == "batchnorm":
            z, cache = _bn_forward(net, i, a, o, plan, train)
        else:
            z = a
        # relu, pooling and reshapes cannot create NaN/Inf from finite input
        if kind in ("dense", "conv2d", "batchnorm") and not np.isfinite(z).all():
            raise NonFiniteError(i, kind)
        caches.append(cache)
        a = z
        in_sel = o
    return a, caches


def backward_from_logits(net, plan, caches, dlogits):
    """Backpropagate dL/dlogits through a cached forward pass."""
    grads = Gradients()
    regs = net.regions(plan)
    shapes = {k: v.shape for k, v in net.params.items()}
    dz = dlogits
    for i in range(len(net.arch.layers) - 1, -1, -1):
        layer = net.arch.layers[i]
        cache = caches[i]
        kind = layer.kind
        if kind == "dense":
            a, W = cache
            grads.put(f"{i}.weight", shapes[f"{i}.weight"], dz.T @ a, regs[f"{i}.weight"])
            if layer.bias:
                grads.put(f"{i}.bias", shapes[f"{i}.bias"], dz.sum(axis=0), regs[f"{i}.bias"])
            dz = dz @ W if i > 0 else None
        elif kind == "conv2d":
            cols, Wm, in_shape, wshape = cache
            d2 = dz.transpose(0, 2, 3, 1).reshape(-1, dz.shape[1])
            grads.put(f"{i}.weight", shapes[f"{i}.weight"], (d2.T @ cols).reshape(wshape), regs[f"{i}.weight"])
            if layer.bias:
                grads.put(f"{i}.bias", shapes[f"{i}.bias"], d2.sum(axis=0), regs[f"{i}.bias"])
            dz = kernels.col2im(d2 @ Wm, in_shape, layer.kernel, layer.kernel) if i > 0 else None
        elif kind == "relu":
            dz = dz * cache
        elif kind == "maxpool2d":
            arg, in_shape = cache
            dz = kernels.maxpool_backward(dz, arg, layer.kernel, in_shape)
        elif kind == "flatten":
            dz = dz.reshape(cache)
        elif kind == "batchnorm":
            dz, dgamma, dbeta = _bn_backward(dz, cache)
            grads.put(f"{i}.gamma", shapes[f"{i}.gamma"], dgamma, regs[f"{i}.gamma"])
            grads.put(f"{i}.beta", shapes[f"{i}.beta"], dbeta, regs[f"{i}.beta"])
        if dz is None:
            break
        if kind in ("dense", "conv2d", "batchnorm") and not np.isfinite(dz).all():
            raise NonFiniteError(i, kind, where="gradient")
    return grads


def forward(model, batch, width=1.0, mode="eval", plan=None):
    """Logits of the ``width``-submodel; ``mode`` is 'train' or 'eval'."""
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval'")
    plan = plan or model.plan(width)
    logits, _ = forward_cached(model, batch, plan, mode == "train")
    return logits


LOSSES = ("ce", "mse", "sse", "distill")


def backward(model, batch, targets, width=1.0, loss="ce", plan=None, **distill_kwargs):
    """Train-mode forward + backward. Returns ``(loss value, Gradients)``.

    ``loss`` is 'ce' (cross-entropy on class labels), 'mse' (mean squared
    error), 'sse' (per-sample summed squared error) or 'distill' (see
    :func:`orderdrop.distill.distill_backward`, which takes the extra
    keyword arguments).
    """
    if loss == "distill":
        from ..distill import distill_backward

        return distill_backward(model, batch, targets, width, **distill_kwargs)
    plan = plan or model.plan(width)
    logits, caches = forward_cached(model, batch, plan, True)
    if loss == "ce":
        value, d = losses.cross_entropy_batch(logits, targets)
    elif loss == "mse":
        value, d = losses.mse_batch(logits, targets)
    elif loss == "sse":
        value, d = losses.sum_squared_batch(logits, targets)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    if not np.isfinite(value):
        raise NonFiniteError(len(model.arch.layers) - 1, "loss", where="loss")
    return value, backward_from_logits(model, plan, caches, d)


def evaluate(model, inputs, labels, width=1.0, plan=None, batch_size=1000):
    """Eval-mode (accuracy, mean cross-entropy) of one submodel."""
    plan = plan or model.plan(width)
    n = len(labels)
    correct = 0
    total_loss = 0.0
    for s in range(0, n, batch_size):
        logits, _ = forward_cached(model, inputs[s:s + batch_size], plan, False)
        y = np.asarray(labels[s:s + batch_size])
        correct += int((logits.argmax(axis=1) == y).sum())
        total_loss += losses.cross_entropy_batch(logits, y)[0] * len(y)
    return correct / n, total_loss / n


def is_prefix_plan(plan):
    return all(is_prefix(s) for s in plan.out_sel)

"""Layer specifications, architecture shape inference and width selectors."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("dense", "conv2d", "maxpool2d", "relu", "flatten", "batchnorm", "softmax-output")
WEIGHTED = ("dense", "conv2d")


def kept_units(p, k):
    """Number of leading units kept at width fraction ``p`` of a ``k``-unit layer.

    Tolerates products like 0.6 * 10 == 6.000000000000001 so the ceiling
    lands on the intended integer.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"width fraction must lie in (0, 1], got {p}")
    return max(1, min(k, math.ceil(p * k - 1e-9)))


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    width: int | None = None
    kernel: int | None = None
    od_eligible: bool = False
    bias: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in WEIGHTED:
            if self.width is None or self.width < 1:
                raise ValueError(f"{self.kind} layer needs width >= 1")
        elif self.od_eligible:
            raise ValueError(f"{self.kind} layer carries no units to drop")
        if self.kind in ("conv2d", "maxpool2d") and (self.kernel is None or self.kernel < 1):
            raise ValueError(f"{self.kind} layer needs a kernel size")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.width is not None:
            d["width"] = self.width
        if self.kernel is not None:
            d["kernel"] = self.kernel
        if self.kind in WEIGHTED:
            d["od_eligible"] = self.od_eligible
            d["bias"] = self.bias
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"kind", "width", "kernel", "od_eligible", "bias"}
        if unknown:
            raise ValueError(f"unknown layer keys: {sorted(unknown)}")
        return cls(**d)


def dense(width, od=True, bias=True):
    return LayerSpec("dense", width=width, od_eligible=od, bias=bias)


def conv2d(width, kernel, od=True, bias=True):
    return LayerSpec("conv2d", width=width, kernel=kernel, od_eligible=od, bias=bias)


def maxpool2d(kernel=2):
    return LayerSpec("maxpool2d", kernel=kernel)


def relu():
    return LayerSpec("relu")


def flatten():
    return LayerSpec("flatten")


def batchnorm():
    return LayerSpec("batchnorm")


def softmax_output():
    return LayerSpec("softmax-output")


@dataclass(frozen=True)
class Architecture:
    """Ordered layer list plus the per-sample input shape ``(D,)`` or ``(C, H, W)``."""

    input_shape: tuple
    layers: tuple
    shapes: tuple = field(init=False, repr=False, compare=False)
    spatial: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        shapes, spatial = [], []
        shape = self.input_shape
        if len(shape) not in (1, 3):
            raise ValueError("input shape must be (D,) or (C, H, W)")
        weighted = [i for i, l in enumerate(self.layers) if l.kind in WEIGHTED]
        if not weighted:
            raise ValueError("architecture has no weight layers")
        if self.layers[weighted[-1]].od_eligible:
            raise ValueError("the final weight layer must keep its full width (od_eligible=False)")
        for i, layer in enumerate(self.layers):
            sp = 1
            if layer.kind == "dense":
                if len(shape) != 1:
                    raise ValueError(f"layer {i}: dense needs a flat input, got {shape}")
                shape = (layer.width,)
            elif layer.kind == "conv2d":
                if len(shape) != 3:
                    raise ValueError(f"layer {i}: conv2d needs (C, H, W) input, got {shape}")
                c, h, w = shape
                k = layer.kernel
                if h < k or w < k:
                    raise ValueError(f"layer {i}: kernel {k} larger than input {h}x{w}")
                shape = (layer.width, h - k + 1, w - k + 1)
            elif layer.kind == "maxpool2d":
                if len(shape) != 3:
                    raise ValueError(f"layer {i}: maxpool2d needs (C, H, W) input")
                c, h, w = shape
                shape = (c, h // layer.kernel, w // layer.kernel)
                if shape[1] < 1 or shape[2] < 1:
                    raise ValueError(f"layer {i}: pooling collapses spatial dims")
            elif layer.kind == "flatten":
                if len(shape) == 3:
                    sp = shape[1] * shape[2]
                shape = (int(np.prod(shape)),)
            elif layer.kind == "softmax-output" and i != len(self.layers) - 1:
                raise ValueError("softmax-output must be the last layer")
            shapes.append(shape)
            spatial.append(sp)
        if len(shapes[-1]) != 1:
            raise ValueError("network output must be flat logits")
        object.__setattr__(self, "shapes", tuple(shapes))
        object.__setattr__(self, "spatial", tuple(spatial))

    @property
    def num_outputs(self):
        return self.shapes[-1][0]

    def in_shape(self, i):
        return self.input_shape if i == 0 else self.shapes[i - 1]

    def param_shapes(self):
        """Ordered mapping of parameter name to full shape."""
        out = {}
        for i, layer in enumerate(self.layers):
            fan_in = self.in_shape(i)
            if layer.kind == "dense":
                out[f"{i}.weight"] = (layer.width, fan_in[0])
            elif layer.kind == "conv2d":
                out[f"{i}.weight"] = (layer.width, fan_in[0], layer.kernel, layer.kernel)
            elif layer.kind == "batchnorm":
                out[f"{i}.gamma"] = (fan_in[0],)
                out[f"{i}.beta"] = (fan_in[0],)
            if layer.kind in WEIGHTED and layer.bias:
                out[f"{i}.bias"] = (layer.width,)
        return out

    def batchnorm_layers(self):
        return [i for i, l in enumerate(self.layers) if l.kind == "batchnorm"]

    def scaled(self, p):
        """Architecture whose od-eligible layers are physically ``ceil(p*K)`` wide."""
        layers = [
            LayerSpec(l.kind, kept_units(p, l.width), l.kernel, l.od_eligible, l.bias) if l.od_eligible else l
            for l in self.layers
        ]
        return Architecture(self.input_shape, layers)

    def to_dict(self):
        return {"input_shape": list(self.input_shape), "layers": [l.to_dict() for l in self.layers]}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"input_shape", "layers"}
        if unknown:
            raise ValueError(f"unknown architecture keys: {sorted(unknown)}")
        return cls(tuple(d["input_shape"]), tuple(LayerSpec.from_dict(l) for l in d["layers"]))

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


# -- selectors ---------------------------------------------------------------
# A selector picks units along the feature axis: slice(0, k) for an ordered
# prefix, or a sorted integer array for an arbitrary (random) subset.


def as_index(sel):
    if isinstance(sel, slice):
        return np.arange(sel.start or 0, sel.stop)
    return np.asarray(sel, dtype=np.intp)


def sel_len(sel):
    if isinstance(sel, slice):
        return sel.stop - (sel.start or 0)
    return len(sel)


def expand_sel(sel, spatial):
    """Channel selector -> selector over channel-major flattened features."""
    if spatial == 1:
        return sel
    if isinstance(sel, slice):
        return slice(0, sel.stop * spatial)
    sel = np.asarray(sel, dtype=np.intp)
    return (sel[:, None] * spatial + np.arange(spatial)[None, :]).ravel()


def block(out_sel, in_sel):
    """Index tuple for the (out, in) block of a weight tensor."""
    if isinstance(out_sel, slice) and isinstance(in_sel, slice):
        return (out_sel, in_sel)
    return np.ix_(as_index(out_sel), as_index(in_sel))


def is_prefix(sel):
    return isinstance(sel, slice)

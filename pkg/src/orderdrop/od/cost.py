"""Weight-free MAC / parameter counting for p-reduced networks.

Counting convention: one MAC per multiply-accumulate of a conv or dense
layer, plus one per output element for the bias add when the layer has a
bias. Batchnorm, activation and pooling work is tallied separately as
per-element ``other_ops`` and kept out of the MAC figure. Parameters are
weights, biases and batchnorm affine pairs; running statistics are not
parameters.
"""

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

from ..nn.layers import WEIGHTED, Architecture, kept_units

BYTES_PER_PARAM = 8


@dataclass(frozen=True)
class CostLayer:
    kind: str  # conv | dense | bn | elementwise
    in_ch: int
    out_ch: int
    kernel: int = 1
    out_hw: tuple = (1, 1)
    bias: bool = False
    od_in: bool = True
    od_out: bool = True
    in_spatial: int = 1  # features per input channel (dense after flatten)


@dataclass(frozen=True)
class ArchCostDescriptor:
    name: str
    layers: tuple

    def __post_init__(self):
        # residual branches read earlier channel counts, so each layer's input
        # must match the network input or some earlier layer's output
        produced = set()
        for l in self.layers:
            if l.kind in ("conv", "dense"):
                if produced and l.in_ch not in produced:
                    raise ValueError(f"{self.name}: no earlier layer produces {l.in_ch} channels")
                produced.update((l.in_ch, l.out_ch))
            elif produced and l.out_ch not in produced:
                raise ValueError(f"{self.name}: {l.kind} layer over {l.out_ch} channels nobody produced")


class Cost(NamedTuple):
    macs: int
    params: int
    other_ops: int


class CommSavings(NamedTuple):
    downstream_bytes: int
    upstream_bytes: int
    factor: float
    weight_factor: float


def _ch(c, p, od):
    return kept_units(p, c) if od else c


def cost_model(desc, p=1.0):
    """Exact (MACs, params, other per-element ops) of the ``p``-submodel."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"width fraction must lie in (0, 1], got {p}")
    macs = params = other = 0
    for l in desc.layers:
        hw = l.out_hw[0] * l.out_hw[1]
        if l.kind in ("conv", "dense"):
            cin = _ch(l.in_ch, p, l.od_in) * l.in_spatial
            cout = _ch(l.out_ch, p, l.od_out)
            w = cout * cin * l.kernel * l.kernel
            macs += w * hw
            params += w
            if l.bias:
                macs += cout * hw
                params += cout
        elif l.kind == "bn":
            c = _ch(l.out_ch, p, l.od_out)
            params += 2 * c
            other += 2 * c * hw
        elif l.kind == "elementwise":
            other += _ch(l.out_ch, p, l.od_out) * hw
        else:
            raise ValueError(f"unknown cost layer kind {l.kind!r}")
    return Cost(macs, params, other)


def _weight_params(desc, p):
    total = 0
    for l in desc.layers:
        if l.kind in ("conv", "dense"):
            total += _ch(l.out_ch, p, l.od_out) * _ch(l.in_ch, p, l.od_in) * l.in_spatial * l.kernel * l.kernel
    return total


def comm_savings(desc, p_cap):
    """Bytes exchanged by a client capped at ``p_cap`` and the saving vs full width."""
    full = cost_model(desc, 1.0).params
    capped = cost_model(desc, p_cap).params
    nbytes = BYTES_PER_PARAM * capped
    return CommSavings(nbytes, nbytes, full / capped, _weight_params(desc, 1.0) / _weight_params(desc, p_cap))


# -- descriptors -------------------------------------------------------------


def dense_layer(n_in, n_out, bias=True, od_in=True, od_out=True):
    return ArchCostDescriptor(f"dense{n_in}x{n_out}", (CostLayer("dense", n_in, n_out, bias=bias, od_in=od_in, od_out=od_out),))


def femnist_cnn(num_classes=62):
    """Two 5x5 conv layers (10, 20 filters), each followed by 2x2 max-pool, then a dense output."""
    return ArchCostDescriptor(
        "femnist_cnn",
        (
            CostLayer("conv", 1, 10, 5, (24, 24), bias=True, od_in=False),
            CostLayer("elementwise", 10, 10, out_hw=(24, 24)),  # relu
            CostLayer("elementwise", 10, 10, out_hw=(12, 12)),  # max-pool
            CostLayer("conv", 10, 20, 5, (8, 8), bias=True),
            CostLayer("elementwise", 20, 20, out_hw=(8, 8)),
            CostLayer("elementwise", 20, 20, out_hw=(4, 4)),
            CostLayer("dense", 20, num_classes, bias=True, od_out=False, in_spatial=16),
        ),
    )


def resnet18_cifar(num_classes=10):
    """CIFAR-style ResNet18: 3x3 stem, no max-pool, four stages of two basic blocks."""
    layers = [CostLayer("conv", 3, 64, 3, (32, 32), od_in=False), CostLayer("bn", 64, 64, out_hw=(32, 32))]
    layers.append(CostLayer("elementwise", 64, 64, out_hw=(32, 32)))
    cin, size = 64, 32
    for cout, stride in ((64, 1), (128, 2), (256, 2), (512, 2)):
        for b in range(2):
            s = stride if b == 0 else 1
            out = size // s
            hw = (out, out)
            layers += [
                CostLayer("conv", cin, cout, 3, hw),
                CostLayer("bn", cout, cout, out_hw=hw),
                CostLayer("elementwise", cout, cout, out_hw=hw),
                CostLayer("conv", cout, cout, 3, hw),
                CostLayer("bn", cout, cout, out_hw=hw),
            ]
            if s != 1 or cin != cout:
                layers += [CostLayer("conv", cin, cout, 1, hw), CostLayer("bn", cout, cout, out_hw=hw)]
            layers.append(CostLayer("elementwise", cout, cout, out_hw=hw))  # add + relu
            cin, size = cout, out
    layers.append(CostLayer("elementwise", 512, 512, out_hw=(4, 4)))  # global average pool
    layers.append(CostLayer("dense", 512, num_classes, bias=True, od_out=False))
    return ArchCostDescriptor("resnet18_cifar", tuple(layers))


def from_architecture(arch, name="model"):
    """Descriptor for an nn ``Architecture``; its counts match ``Network.param_count``."""
    if not isinstance(arch, Architecture):
        raise TypeError("expected an Architecture")
    layers = []
    in_od = False
    spatial_in = 1
    for i, l in enumerate(arch.layers):
        in_shape = arch.in_shape(i)
        out_shape = arch.shapes[i]
        hw = tuple(out_shape[1:]) if len(out_shape) == 3 else (1, 1)
        if l.kind in WEIGHTED:
            kind = "conv" if l.kind == "conv2d" else "dense"
            cin = in_shape[0] // spatial_in if kind == "dense" else in_shape[0]
            layers.append(
                CostLayer(kind, cin, l.width, l.kernel or 1, hw, l.bias, od_in=in_od, od_out=l.od_eligible, in_spatial=spatial_in if kind == "dense" else 1)
            )
            in_od = l.od_eligible
            spatial_in = 1
        elif l.kind == "batchnorm":
            if spatial_in != 1:
                raise ValueError("batchnorm directly after flatten is not supported by the cost model")
            layers.append(CostLayer("bn", out_shape[0], out_shape[0], out_hw=hw, od_out=in_od))
        elif l.kind == "flatten":
            spatial_in = arch.spatial[i]
        elif l.kind in ("relu", "maxpool2d"):
            layers.append(CostLayer("elementwise", out_shape[0], out_shape[0], out_hw=hw, od_out=in_od))
    return ArchCostDescriptor(name, tuple(layers))


def cost_rows(desc, widths):
    rows = []
    for p in widths:
        c = cost_model(desc, p)
        s = comm_savings(desc, p)
        rows.append(
            {"arch": desc.name, "p": p, "macs": c.macs, "params": c.params, "downstream_bytes": s.downstream_bytes, "upstream_bytes": s.upstream_bytes}
        )
    return rows


CSV_COLUMNS = ("arch", "p", "macs", "params", "downstream_bytes", "upstream_bytes")


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "p": f"{r['p']:g}"})
    return buf.getvalue()

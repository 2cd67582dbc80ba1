"""Binary checkpoint container.

Layout (all integers little-endian)::

    8  bytes  magic b"ODCKPT\\x00\\x01"
    4  bytes  u32 format version
    8  bytes  u64 header length H
    H  bytes  canonical JSON header: architecture, widths, parameter order
    ...       parameter blocks, float64 LE, in architecture order
    ...       per width p (ascending): f64 p, then per batchnorm layer
              u64 update count, mean[k], var[k] (k = kept width at p)
    8  bytes  u64 checksum: blake2b-64 of every preceding byte
"""

import hashlib
import io
import json
import struct

import numpy as np

from .layers import Architecture
from .network import Network, NormStats

MAGIC = b"ODCKPT\x00\x01"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _checksum(data):
    return struct.unpack("<Q", hashlib.blake2b(data, digest_size=8).digest())[0]


def header_of(net):
    return {
        "format_version": FORMAT_VERSION,
        "architecture": net.arch.to_dict(),
        "widths": list(net.widths),
        "params": [[k, list(v.shape)] for k, v in net.params.items()],
        "norm_layers": net.arch.batchnorm_layers(),
    }


def dumps(net):
    buf = io.BytesIO()
    header = json.dumps(header_of(net), sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(MAGIC)
    buf.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
    buf.write(header)
    for v in net.params.values():
        buf.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
    for p in net.widths:
        buf.write(struct.pack("<d", p))
        for i in net.arch.batchnorm_layers():
            st = net.norm_stats[p][i]
            buf.write(struct.pack("<Q", st.count))
            buf.write(np.ascontiguousarray(st.mean, dtype="<f8").tobytes())
            buf.write(np.ascontiguousarray(st.var, dtype="<f8").tobytes())
    data = buf.getvalue()
    return data + struct.pack("<Q", _checksum(data))


def save(net, path):
    data = dumps(net)
    with open(path, "wb") as f:
        f.write(data)
    return len(data)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError(f"checkpoint truncated at byte {len(self.data)}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def floats(self, count):
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def _parse_header(data):
    if len(data) < 20 or data[:8] != MAGIC:
        if len(data) < 8 and MAGIC.startswith(bytes(data)):
            raise CheckpointError(f"checkpoint truncated at byte {len(data)}")
        raise CheckpointError("not a checkpoint (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if 20 + hlen > len(data):
        raise CheckpointError(f"checkpoint truncated at byte {len(data)}")
    return json.loads(data[20:20 + hlen].decode("utf-8")), 20 + hlen


def read_header(data):
    """Decoded JSON header of a checkpoint byte string."""
    return _parse_header(data)[0]


def loads(data):
    header, offset = _parse_header(data)
    arch = Architecture.from_dict(header["architecture"])
    widths = tuple(header["widths"])
    shapes = [(name, tuple(shape)) for name, shape in header["params"]]
    probe = Network(arch, widths, params={n: np.zeros(s) for n, s in shapes})
    kept = {p: [len(probe.norm_stats[p][i].mean) for i in header["norm_layers"]] for p in widths}
    expected = offset + 8 * sum(int(np.prod(s)) for _, s in shapes)
    expected += sum(8 + sum(8 + 16 * k for k in ks) for ks in kept.values()) + 8
    if len(data) < expected:
        raise CheckpointError(f"checkpoint truncated at byte {len(data)}")
    if len(data) > expected:
        raise CheckpointError("trailing bytes after checksum")
    body, tail = data[:-8], data[-8:]
    if struct.unpack("<Q", tail)[0] != _checksum(body):
        raise CheckpointError("checksum mismatch")
    r = _Reader(body)
    r.pos = offset
    params = {name: r.floats(int(np.prod(shape))).reshape(shape) for name, shape in shapes}
    stats = {}
    for p in widths:
        (stored,) = struct.unpack("<d", r.take(8))
        if stored != p:
            raise CheckpointError(f"normalisation block for width {stored} where {p} expected")
        stats[p] = {}
        for i, k in zip(header["norm_layers"], kept[p]):
            (count,) = struct.unpack("<Q", r.take(8))
            stats[p][i] = NormStats(r.floats(k), r.floats(k), int(count))
    return Network(arch, widths, params=params, norm_stats=stats)


def load(path):
    with open(path, "rb") as f:
        return loads(f.read())

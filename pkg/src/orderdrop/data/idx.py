"""IDX container reader/writer (big-endian header, raw payload)."""

import struct

import numpy as np

from .dataset import Dataset

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

_DTYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}
_CODES = {np.dtype(v).str.lstrip("<>|"): k for k, v in _DTYPES.items()}


class IdxFormatError(ValueError):
    pass


def parse_idx(data):
    """Decode IDX bytes into an ndarray (raw values, original dtype)."""
    if len(data) < 4:
        raise IdxFormatError(f"truncated at byte {len(data)} (header needs 4)")
    zero, code, ndim = struct.unpack(">HBB", data[:4])
    if zero != 0 or code not in _DTYPES or ndim == 0:
        raise IdxFormatError(f"bad magic number 0x{int.from_bytes(data[:4], 'big'):08x}")
    head = 4 + 4 * ndim
    if len(data) < head:
        raise IdxFormatError(f"truncated at byte {len(data)} (header needs {head})")
    dims = struct.unpack(f">{ndim}I", data[4:head])
    dtype = np.dtype(_DTYPES[code])
    need = head + int(np.prod(dims)) * dtype.itemsize
    if len(data) < need:
        raise IdxFormatError(f"truncated at byte {len(data)} (payload needs {need})")
    if len(data) > need:
        raise IdxFormatError(f"{len(data) - need} trailing bytes after payload")
    return np.frombuffer(data, dtype=dtype, offset=head).reshape(dims)


def read_idx(path):
    with open(path, "rb") as f:
        return parse_idx(f.read())


def magic_of(arr):
    arr = np.asarray(arr)
    code = _CODES.get(arr.dtype.str.lstrip("<>|"))
    if code is None:
        raise IdxFormatError(f"dtype {arr.dtype} has no IDX code")
    return (code << 8) | arr.ndim


def write_idx(path, arr):
    arr = np.asarray(arr)
    magic = magic_of(arr)
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        f.write(np.ascontiguousarray(arr, dtype=_DTYPES[magic >> 8]).tobytes())


def _read_expect(path, magic):
    with open(path, "rb") as f:
        data = f.read()
    if len(data) >= 4 and struct.unpack(">I", data[:4])[0] != magic:
        raise IdxFormatError(f"{path}: bad magic number 0x{struct.unpack('>I', data[:4])[0]:08x}, expected 0x{magic:08x}")
    return parse_idx(data)


def load_idx(images_path, labels_path, num_classes=10, name="idx"):
    """Images scaled to [0, 1] with a channel axis, shape (N, 1, H, W)."""
    images = _read_expect(images_path, IMAGES_MAGIC)
    labels = _read_expect(labels_path, LABELS_MAGIC).astype(np.int64)
    if len(images) != len(labels):
        raise IdxFormatError(f"{len(images)} images but {len(labels)} labels")
    bad = np.flatnonzero((labels < 0) | (labels >= num_classes))
    if len(bad):
        raise IdxFormatError(f"label {labels[bad[0]]} at index {bad[0]} outside [0, {num_classes})")
    x = images.astype(np.float64)[:, None, :, :] / 255.0
    return Dataset(x, labels, name, num_classes)

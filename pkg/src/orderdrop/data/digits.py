"""Procedural 28x28 handwritten-style digits written as IDX files.

Each digit is a set of strokes (polylines and elliptic arcs) in the unit
square. Every sample gets a random affine jitter, stroke thickness,
intensity and pixel noise, then is rasterised by distance to the nearest
stroke segment.
"""

import os

import numpy as np

from ..rng import stream
from .idx import load_idx, write_idx

SIZE = 28


def _arc(cx, cy, rx, ry, a0, a1, n=24):
    t = np.radians(np.linspace(a0, a1, n))
    return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)


def _line(*pts):
    return np.array(pts, dtype=np.float64)


# y grows downwards; angle -90 is the top of an arc
STROKES = {
    0: [_arc(0.5, 0.5, 0.28, 0.4, 0, 360, 40)],
    1: [_line((0.36, 0.24), (0.52, 0.08), (0.52, 0.92))],
    2: [np.vstack([_arc(0.5, 0.3, 0.24, 0.21, -180, 35), _line((0.24, 0.9), (0.8, 0.9))])],
    3: [_arc(0.47, 0.29, 0.21, 0.2, -160, 90), _arc(0.47, 0.71, 0.23, 0.21, -90, 160)],
    4: [_line((0.66, 0.92), (0.66, 0.08), (0.2, 0.64), (0.84, 0.64))],
    5: [np.vstack([_line((0.76, 0.1), (0.32, 0.1), (0.3, 0.47)), _arc(0.5, 0.65, 0.25, 0.24, -140, 150)])],
    6: [_line((0.7, 0.1), (0.4, 0.3), (0.29, 0.64)), _arc(0.5, 0.68, 0.22, 0.22, 0, 360, 32)],
    7: [_line((0.2, 0.1), (0.8, 0.1), (0.42, 0.92))],
    8: [_arc(0.5, 0.29, 0.19, 0.19, 0, 360, 32), _arc(0.5, 0.7, 0.23, 0.21, 0, 360, 32)],
    9: [_arc(0.5, 0.31, 0.21, 0.21, 0, 360, 32), _line((0.71, 0.31), (0.62, 0.92))],
}

_GRID = np.stack(np.meshgrid(np.arange(SIZE) + 0.5, np.arange(SIZE) + 0.5, indexing="xy"), axis=-1).reshape(-1, 2)


def _segment_distance(points, a, b):
    ab = b - a
    t = ((points[:, None, :] - a[None]) * ab[None]).sum(-1) / np.maximum((ab * ab).sum(-1), 1e-12)[None]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.sqrt(((points[:, None, :] - proj) ** 2).sum(-1)).min(axis=1)


def render_digit(digit, rng):
    """One uint8 28x28 image of ``digit``."""
    angle = np.radians(rng.uniform(-22, 22))
    shear = rng.uniform(-0.45, 0.45)
    sx, sy = rng.uniform(0.65, 1.1, size=2)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    M = rot @ np.array([[1.0, shear], [0.0, 1.0]]) @ np.diag([sx * 18, sy * 20])
    shift = np.array([SIZE / 2, SIZE / 2]) + rng.uniform(-3, 3, size=2)
    segs_a, segs_b = [], []
    for stroke in STROKES[digit]:
        pts = (stroke - 0.5) @ M.T + shift
        pts = pts + rng.normal(0, 0.7, size=pts.shape)
        segs_a.append(pts[:-1])
        segs_b.append(pts[1:])
    if rng.random() < 0.35:  # stray pen mark
        a = rng.uniform(2, SIZE - 2, size=2)
        b = a + rng.normal(0, 5, size=2)
        segs_a.append(a[None])
        segs_b.append(b[None])
    d = _segment_distance(_GRID, np.vstack(segs_a), np.vstack(segs_b))
    width = rng.uniform(0.6, 2.0)
    img = np.clip(width + 0.5 - d, 0.0, 1.0) * rng.uniform(0.5, 1.0)
    img = np.clip(img + rng.normal(0, 0.15, size=img.shape), 0.0, 1.0)
    return np.round(img.reshape(SIZE, SIZE) * 255).astype(np.uint8)


def make_digits(count, seed, purpose="digits"):
    """(images uint8 (N, 28, 28), labels uint8) with round-robin, shuffled labels."""
    rng = stream(seed, purpose)
    labels = rng.permutation(np.arange(count) % 10).astype(np.uint8)
    images = np.stack([render_digit(int(y), rng) for y in labels])
    return images, labels


def write_digit_idx(directory, train=8000, test=2000, seed=0):
    """Write train/test IDX pairs; returns the four paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for split, count in (("train", train), ("test", test)):
        images, labels = make_digits(count, seed, f"digits-{split}")
        paths[split] = (os.path.join(directory, f"{split}-images-idx3-ubyte"), os.path.join(directory, f"{split}-labels-idx1-ubyte"))
        write_idx(paths[split][0], images)
        write_idx(paths[split][1], labels)
    return paths


def digit_datasets(directory, train=8000, test=2000, seed=0):
    """Load (train, test) digit Datasets, generating the IDX files if absent."""
    tag = os.path.join(directory, f"digits-{train}-{test}-s{seed}")
    paths = {s: (os.path.join(tag, f"{s}-images-idx3-ubyte"), os.path.join(tag, f"{s}-labels-idx1-ubyte")) for s in ("train", "test")}
    if not all(os.path.exists(p) for pair in paths.values() for p in pair):
        paths = write_digit_idx(tag, train, test, seed)
    return tuple(load_idx(*paths[s], num_classes=10, name=f"digits-{s}") for s in ("train", "test"))

"""Synthetic sources: unit-ball inputs, linear maps, toy classification."""

import numpy as np

from .dataset import Dataset


def sample_unit_ball(n, count, rng):
    """``count`` points uniform in the solid ``n``-ball: Gaussian direction, radius U**(1/n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random(count)[:, None] ** (1.0 / n)


def make_svd_matrix(singular_values, rng):
    """A = U diag(s) V^T with U, V the singular vectors of a normal random square matrix."""
    s = np.asarray(singular_values, dtype=np.float64)
    u, _, vt = np.linalg.svd(rng.standard_normal((len(s), len(s))))
    return u @ np.diag(s) @ vt


def make_linear_task(A, count, rng):
    A = np.asarray(A, dtype=np.float64)
    if np.linalg.matrix_rank(A) < min(A.shape):
        raise ValueError("A must have full rank")
    x = sample_unit_ball(A.shape[1], count, rng)
    return Dataset(x, x @ A.T, "linear")


def make_classification_task(mode, classes, count, noise, rng, dim=2):
    """Blobs around well-spread centroids or concentric rings; labels round-robin."""
    if classes < 2:
        raise ValueError("need at least two classes")
    y = np.arange(count) % classes
    if mode == "blobs":
        centers = rng.standard_normal((classes, dim))
        centers *= 4.0 / np.linalg.norm(centers, axis=1, keepdims=True).clip(1e-12)
        x = centers[y] + noise * rng.standard_normal((count, dim))
    elif mode == "rings":
        if dim != 2:
            raise ValueError("rings are two-dimensional")
        theta = rng.uniform(0, 2 * np.pi, count)
        r = (1.0 + y) + noise * rng.standard_normal(count)
        x = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    perm = rng.permutation(count)
    return Dataset(x[perm], y[perm], f"{mode}{classes}", classes)

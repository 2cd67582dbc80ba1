"""One-sided Jacobi SVD for small dense matrices, and truncated reconstructions."""

import numpy as np

OFF_TOL = 1e-12
MAX_SWEEPS = 100


def jacobi_svd(A, tol=OFF_TOL, max_sweeps=MAX_SWEEPS):
    """Thin SVD ``A = U diag(s) V^T`` with ``s`` descending.

    Columns of a working copy are rotated pairwise until their Gram
    matrix is diagonal: the off-diagonal Frobenius norm, relative to the
    whole Gram norm, drops below ``tol``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if A.shape[0] < A.shape[1]:
        V, s, U = jacobi_svd(A.T, tol, max_sweeps)
        return U, s, V
    W = A.copy()
    n = W.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        G = W.T @ W
        total = np.linalg.norm(G)
        off = np.linalg.norm(G - np.diag(np.diag(G)))
        if total == 0 or off <= tol * total:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = W[:, i] @ W[:, i]
                beta = W[:, j] @ W[:, j]
                gamma = W[:, i] @ W[:, j]
                if abs(gamma) <= 1e-300:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = c * t
                wi, wj = W[:, i].copy(), W[:, j].copy()
                W[:, i], W[:, j] = c * wi - sn * wj, sn * wi + c * wj
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i], V[:, j] = c * vi - sn * vj, sn * vi + c * vj
    else:
        raise ArithmeticError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
    s = np.linalg.norm(W, axis=0)
    order = np.argsort(-s, kind="stable")
    s, W, V = s[order], W[:, order], V[:, order]
    U = np.zeros_like(W)
    nz = s > 0
    U[:, nz] = W[:, nz] / s[nz]
    return U, s, V


def numerical_rank(s, shape):
    if not len(s) or s[0] == 0:
        return 0
    return int(np.sum(s > max(shape) * np.finfo(float).eps * s[0]))


def best_rank_approx(A, b):
    """Best rank-``b`` approximation of ``A`` in Frobenius norm (truncated SVD)."""
    U, s, V = jacobi_svd(A)
    r = numerical_rank(s, np.shape(A))
    if not 1 <= b <= r:
        raise ValueError(f"rank {b} outside [1, {r}]")
    return (U[:, :b] * s[:b]) @ V[:, :b].T

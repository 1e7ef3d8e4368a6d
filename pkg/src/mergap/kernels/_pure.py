"""NumPy reference implementations of the hot numeric kernels.

These are the fallback when the compiled extension is unavailable, and the
ground truth the extension is tested against.
"""

from __future__ import annotations

import numpy as np


def pairwise_sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of x (n, d) and y (m, d)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    # ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b, clipped: cancellation can go negative
    xx = np.einsum("ij,ij->i", x, x)
    yy = np.einsum("ij,ij->i", y, y)
    d = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(d, 0.0, out=d)
    return d


def kmeans_assign(points: np.ndarray, centers: np.ndarray):
    """Nearest-center index and squared distance for every point.

    Ties go to the lowest center index.
    """
    d = pairwise_sq_dists(points, centers)
    assign = np.argmin(d, axis=1)
    return assign.astype(np.int64), d[np.arange(len(points)), assign]


def tsne_grad(p: np.ndarray, y: np.ndarray):
    """Gradient of the t-SNE KL objective and its current value.

    p is the symmetric input-affinity matrix (already normalized, zero
    diagonal), y the (n, 2) embedding. Student-t kernel with one degree of
    freedom. Returns (grad, kl) where kl uses natural log and only the
    entries with p > 0 contribute.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    num = 1.0 / (1.0 + pairwise_sq_dists(y, y))
    np.fill_diagonal(num, 0.0)
    z = num.sum()
    q = num / z
    np.maximum(q, 1e-12, out=q)
    pqn = (p - q) * num
    grad = 4.0 * (pqn.sum(axis=1)[:, None] * y - pqn @ y)
    mask = p > 0
    kl = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    return grad, kl

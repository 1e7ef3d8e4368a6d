"""Distribution-gap diagnostics between feature (or label) clouds.

Four complementary views of how far apart two corpora sit:

* sliced Wasserstein-1 distance (transport cost along random directions),
* Jensen-Shannon divergence of per-dimension histograms (in bits),
* k-means cluster composition (which corpora share which clusters),
* a 2-D t-SNE projection with per-corpus centroid statistics.

Everything is seed-deterministic; the heavy inner loops live in
mergap.kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


def _as_cloud(x, name: str = "samples") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty (n, d) array")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def unit_projections(dim: int, n_projections: int, seed: int = 0) -> np.ndarray:
    """Directions drawn uniformly on the unit sphere (normalized Gaussians)."""
    if dim < 1 or n_projections < 1:
        raise ValueError("dim and n_projections must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    vecs = rng.standard_normal((n_projections, dim))
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    # resample the (measure-zero) degenerate draws rather than dividing by ~0
    while np.any(norms < 1e-12):
        bad = norms[:, 0] < 1e-12
        vecs[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs / norms


def w1_1d(x: np.ndarray, y: np.ndarray) -> float:
    """Exact 1-D Wasserstein-1 between empirical samples (any sizes).

    Integral of |F_x - F_y| over the merged support; for equal sample
    counts this reduces to the mean absolute difference of sorted values.
    """
    x = np.sort(np.asarray(x, dtype=np.float64).ravel())
    y = np.sort(np.asarray(y, dtype=np.float64).ravel())
    if x.size == 0 or y.size == 0:
        raise ValueError("w1_1d needs non-empty samples")
    if x.size == y.size:
        return float(np.mean(np.abs(x - y)))
    grid = np.sort(np.concatenate([x, y]))
    deltas = np.diff(grid)
    cdf_x = np.searchsorted(x, grid[:-1], side="right") / x.size
    cdf_y = np.searchsorted(y, grid[:-1], side="right") / y.size
    return float(np.sum(np.abs(cdf_x - cdf_y) * deltas))


def sliced_wasserstein(x, y, n_projections: int = 128, seed: int = 0) -> float:
    """Average exact 1-D W1 over random unit-sphere projections.

    This is the raw sliced value. Projecting contracts distances by the
    mean direction cosine, so for point clouds separated by a shift of
    length L the sliced value is about L * w1_projection_factor(d), not L.
    """
    x = _as_cloud(x, "x")
    y = _as_cloud(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ValueError("x and y dimensionality mismatch")
    thetas = unit_projections(x.shape[1], n_projections, seed)
    px = x @ thetas.T  # (n, n_projections)
    py = y @ thetas.T
    total = 0.0
    for j in range(n_projections):
        total += w1_1d(px[:, j], py[:, j])
    return total / n_projections


def w1_projection_factor(dim: int) -> float:
    """E|theta . u| for uniform unit theta and fixed unit u in R^dim.

    Equals Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)); 2/pi at d=2. Dividing a
    sliced W1 by this factor undoes the average projection shrinkage, which
    makes sliced values comparable to exact W1 for translation-dominated
    gaps.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    return math.gamma(dim / 2.0) / (math.sqrt(math.pi) * math.gamma((dim + 1) / 2.0))


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def js_from_histograms(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence between two discrete distributions, in bits."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape or p.size == 0:
        raise ValueError("histograms must be non-empty and equally sized")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("histograms must be nonnegative")
    ps, qs = p.sum(), q.sum()
    if ps <= 0 or qs <= 0:
        raise ValueError("histograms must have positive mass")
    p = p / ps
    q = q / qs
    m = 0.5 * (p + q)
    return _entropy_bits(m) - 0.5 * (_entropy_bits(p) + _entropy_bits(q))


def js_divergence(x, y, bins: int = 32) -> float:
    """Mean per-dimension JS divergence of histograms on the shared range.

    Bin edges span the min/max of the union of both clouds per dimension,
    so the result lies in [0, 1] bits: 0 for identical samples, 1 for
    fully disjoint supports.
    """
    x = _as_cloud(x, "x")
    y = _as_cloud(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ValueError("x and y dimensionality mismatch")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    total = 0.0
    for j in range(x.shape[1]):
        xs, ys = x[:, j], y[:, j]
        lo = min(xs.min(), ys.min())
        hi = max(xs.max(), ys.max())
        if hi <= lo:  # all mass of both clouds at one point: identical in this dim
            continue
        edges = np.linspace(lo, hi, bins + 1)
        hx, _ = np.histogram(xs, bins=edges)
        hy, _ = np.histogram(ys, bins=edges)
        total += js_from_histograms(hx, hy)
    return total / x.shape[1]


def divergence_matrix(clouds: dict, metric: str = "w1", **kwargs):
    """Pairwise symmetric divergences between named sample clouds.

    Returns (names, matrix). metric is "w1" (sliced_wasserstein) or "js".
    """
    names = tuple(clouds)
    if len(names) < 2:
        raise ValueError("need at least two clouds")
    fns = {"w1": sliced_wasserstein, "js": js_divergence}
    if metric not in fns:
        raise ValueError(f"unknown metric {metric!r} (want one of {sorted(fns)})")
    fn = fns[metric]
    k = len(names)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            val = fn(clouds[names[i]], clouds[names[j]], **kwargs)
            out[i, j] = val
            out[j, i] = val
    return names, out


@dataclass(frozen=True)
class KmeansResult:
    centers: np.ndarray  # (k, d)
    assignments: np.ndarray  # (n,) int
    inertia: float
    n_iter: int
    inertia_history: tuple


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = kernels.pairwise_sq_dists(points, centers[:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:  # every point already coincides with a center
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = points[idx]
        d2 = np.minimum(d2, kernels.pairwise_sq_dists(points, centers[j : j + 1])[:, 0])
    return centers


def kmeans(points, k: int = 3, seed: int = 0, max_iter: int = 300) -> KmeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Runs to an assignment fixpoint (or max_iter). Empty clusters are
    re-seeded from the point currently farthest from its center, so every
    returned cluster is non-empty when k <= n.
    """
    points = _as_cloud(points, "points")
    n = points.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = _kmeans_pp_init(points, k, rng)
    assignments, d2 = kernels.kmeans_assign(points, centers)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        counts = np.bincount(assignments, minlength=k)
        if np.any(counts == 0):
            # re-seed each empty cluster from the worst-served point
            for c in np.flatnonzero(counts == 0):
                far = int(np.argmax(d2))
                centers[c] = points[far]
                d2[far] = 0.0
            assignments, d2 = kernels.kmeans_assign(points, centers)
        for c in range(k):
            mask = assignments == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
        new_assignments, d2 = kernels.kmeans_assign(points, centers)
        inertia = float(d2.sum())
        # Lloyd steps never increase inertia; allow only float rounding slack
        assert not history or inertia <= history[-1] * (1.0 + 1e-9) + 1e-12, (
            f"inertia increased: {history[-1]} -> {inertia}"
        )
        history.append(inertia)
        converged = bool(np.array_equal(new_assignments, assignments))
        assignments = new_assignments
        if converged:
            break
    return KmeansResult(
        centers=centers,
        assignments=assignments,
        inertia=history[-1],
        n_iter=it,
        inertia_history=tuple(history),
    )


@dataclass(frozen=True)
class ClusterReport:
    """How the points of each source corpus distribute over clusters."""

    k: int
    dataset_ids: tuple  # distinct source names, in first-seen order
    counts: dict  # (cluster index, dataset_id) -> count
    fractions: dict  # (cluster index, dataset_id) -> share of that dataset

    def cluster_sizes(self) -> dict:
        sizes: dict = {}
        for (c, _), cnt in self.counts.items():
            sizes[c] = sizes.get(c, 0) + cnt
        return sizes


def cluster_composition(assignments, dataset_ids) -> ClusterReport:
    """Cross-tabulate cluster membership against the source corpus of each point."""
    assignments = np.asarray(assignments)
    dataset_ids = list(dataset_ids)
    if len(dataset_ids) != assignments.shape[0]:
        raise ValueError("assignments and dataset_ids length mismatch")
    names = tuple(dict.fromkeys(dataset_ids))
    totals = {name: dataset_ids.count(name) for name in names}
    counts: dict = {}
    for c, name in zip(assignments.tolist(), dataset_ids):
        counts[(c, name)] = counts.get((c, name), 0) + 1
    fractions = {key: cnt / totals[key[1]] for key, cnt in counts.items()}
    k = int(assignments.max()) + 1 if assignments.size else 0
    return ClusterReport(k=k, dataset_ids=names, counts=counts, fractions=fractions)


def _conditional_affinities(x: np.ndarray, perplexity: float, tol: float = 1e-5,
                            max_steps: int = 50) -> np.ndarray:
    """Row-stochastic Gaussian affinities whose entropy matches log(perplexity).

    Per-row binary search on the precision beta; rows are vectorized, the
    search runs for all rows simultaneously.
    """
    n = x.shape[0]
    d2 = kernels.pairwise_sq_dists(x, x)
    np.fill_diagonal(d2, 0.0)
    target = math.log(perplexity)
    beta = np.ones(n)
    beta_lo = np.full(n, -np.inf)
    beta_hi = np.full(n, np.inf)
    eye = np.eye(n, dtype=bool)
    p = np.zeros((n, n))
    for _ in range(max_steps):
        p = np.exp(-d2 * beta[:, None])
        p[eye] = 0.0
        sum_p = np.maximum(p.sum(axis=1), 1e-300)
        # Shannon entropy in nats of the row distribution
        h = np.log(sum_p) + beta * np.einsum("ij,ij->i", d2, p) / sum_p
        diff = h - target
        if np.all(np.abs(diff) < tol):
            break
        too_flat = diff > 0  # entropy too high: increase beta
        beta_lo = np.where(too_flat, beta, beta_lo)
        beta_hi = np.where(~too_flat, beta, beta_hi)
        beta = np.where(
            too_flat,
            np.where(np.isinf(beta_hi), beta * 2.0, (beta + beta_hi) / 2.0),
            np.where(np.isinf(beta_lo), beta / 2.0, (beta + beta_lo) / 2.0),
        )
    p = p / np.maximum(p.sum(axis=1, keepdims=True), 1e-300)
    return p


@dataclass(frozen=True)
class Projection2D:
    points: np.ndarray  # (n, 2)
    dataset_ids: tuple  # one source name per point (may be empty)
    centroids: dict  # dataset_id -> (2,) centroid in projection space
    kl_initial: float
    kl_final: float


def tsne(x, perplexity: float = 30.0, seed: int = 0, n_iter: int = 1000,
         dataset_ids=None) -> Projection2D:
    """2-D t-SNE with the standard optimization schedule.

    Early exaggeration (x12) for the first quarter of the run, learning
    rate n/12, momentum 0.5 switching to 0.8, and per-coordinate gains.
    The recorded KL divergences are always against the unexaggerated
    affinities, so kl_final < kl_initial indicates real progress.
    """
    x = _as_cloud(x, "x")
    n = x.shape[0]
    if not (1.0 <= perplexity <= n - 1):
        raise ValueError(f"perplexity must be in [1, {n - 1}], got {perplexity}")
    if dataset_ids is not None and len(dataset_ids) != n:
        raise ValueError("dataset_ids length mismatch")
    if n_iter < 1:
        raise ValueError("n_iter must be positive")

    cond = _conditional_affinities(x, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)

    rng = np.random.Generator(np.random.PCG64(seed))
    y = 1e-4 * rng.standard_normal((n, 2))
    _, kl_initial = kernels.tsne_grad(p, y)

    exaggeration_until = min(250, n_iter)
    lr = n / 12.0
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(n_iter):
        p_eff = p * 12.0 if it < exaggeration_until else p
        grad, _ = kernels.tsne_grad(p_eff, y)
        momentum = 0.5 if it < exaggeration_until else 0.8
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - lr * gains * grad
        y = y + update
        y = y - y.mean(axis=0)

    _, kl_final = kernels.tsne_grad(p, y)

    ids = tuple(dataset_ids) if dataset_ids is not None else ()
    centroids: dict = {}
    if ids:
        for name in dict.fromkeys(ids):
            mask = np.fromiter((i == name for i in ids), dtype=bool, count=n)
            centroids[name] = y[mask].mean(axis=0)
    return Projection2D(
        points=y,
        dataset_ids=ids,
        centroids=centroids,
        kl_initial=float(kl_initial),
        kl_final=float(kl_final),
    )


@dataclass(frozen=True)
class CentroidStats:
    """Mean and population variance of pairwise inter-centroid distances."""

    mean: float
    variance: float
    pair_distances: dict  # (name_a, name_b) -> distance, a before b


def inter_centroid_stats(centroids: dict) -> CentroidStats:
    """Statistics over all distinct centroid pairs (upper triangle only)."""
    names = list(centroids)
    if len(names) < 2:
        raise ValueError("need at least two centroids")
    dists = {}
    values = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            dist = float(np.linalg.norm(np.asarray(centroids[a]) - np.asarray(centroids[b])))
            dists[(a, b)] = dist
            values.append(dist)
    arr = np.array(values)
    return CentroidStats(
        mean=float(arr.mean()),
        variance=float(arr.var()),
        pair_distances=dists,
    )

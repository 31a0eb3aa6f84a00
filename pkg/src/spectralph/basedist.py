"""Non-spectral distances: Euclidean, correlation, Fermat, DTM, core,
geodesics, t-SNE/UMAP graph affinities, PCA preprocessing, and the
finite-ization of infinite entries.

Every kNN-graph-based distance accepts either a point cloud or a precomputed
base distance matrix, so pipelines that start from, e.g., correlation
distance can reuse the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .dmatrix import DistanceMatrix, pairwise_sq_euclidean
from .knngraph import exact_knn, symmetric_knn_graph
from .synthgen import PointCloud

SIGMA_LO = 1e-12
SIGMA_HI = 1e12
MAX_BISECTIONS = 100
CALIBRATION_TOL = 1e-4


def euclidean(pc: PointCloud) -> DistanceMatrix:
    """Pairwise Euclidean distances, exactly symmetric."""
    return DistanceMatrix(np.sqrt(pairwise_sq_euclidean(pc.points)), squared=False)


def correlation_distance(pc: PointCloud) -> DistanceMatrix:
    """1 - Pearson correlation between coordinate vectors."""
    x = pc.points - pc.points.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(x, axis=1)
    if (norms < 1e-300).any():
        bad = int(np.flatnonzero(norms < 1e-300)[0])
        raise ValueError(f"point {bad} has zero coordinate variance")
    x = x / norms[:, None]
    corr = x @ x.T
    vals = 1.0 - (corr + corr.T) / 2.0
    np.clip(vals, 0.0, None, out=vals)  # corr can exceed 1 by an ulp
    np.fill_diagonal(vals, 0.0)
    return DistanceMatrix(vals, squared=False)


def as_base_distance(data: PointCloud | DistanceMatrix) -> DistanceMatrix:
    if isinstance(data, DistanceMatrix):
        return data
    return euclidean(data)


# ---------------------------------------------------------------------------
# shortest-path kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _dijkstra_all(indptr, indices, weights, out):
    """All-sources Dijkstra on a CSR graph; fills out[s, :] per source s."""
    n = indptr.shape[0] - 1
    heap_d = np.empty(4 * (indices.shape[0] + n) + 4, np.float64)
    heap_v = np.empty(4 * (indices.shape[0] + n) + 4, np.int64)
    done = np.zeros(n, np.bool_)
    for src in range(n):
        dist = out[src]
        for i in range(n):
            dist[i] = np.inf
            done[i] = False
        dist[src] = 0.0
        hsize = 0
        heap_d[0] = 0.0
        heap_v[0] = src
        hsize = 1
        while hsize > 0:
            # pop min
            du = heap_d[0]
            u = heap_v[0]
            hsize -= 1
            ld = heap_d[hsize]
            lv = heap_v[hsize]
            i = 0
            while True:
                c = 2 * i + 1
                if c >= hsize:
                    break
                if c + 1 < hsize and heap_d[c + 1] < heap_d[c]:
                    c += 1
                if heap_d[c] < ld:
                    heap_d[i] = heap_d[c]
                    heap_v[i] = heap_v[c]
                    i = c
                else:
                    break
            heap_d[i] = ld
            heap_v[i] = lv
            if done[u] or du > dist[u]:
                continue
            done[u] = True
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                nd = du + weights[p]
                if nd < dist[v]:
                    dist[v] = nd
                    # push (nd, v)
                    i = hsize
                    hsize += 1
                    while i > 0:
                        par = (i - 1) >> 1
                        if heap_d[par] > nd:
                            heap_d[i] = heap_d[par]
                            heap_v[i] = heap_v[par]
                            i = par
                        else:
                            break
                    heap_d[i] = nd
                    heap_v[i] = v


def _shortest_paths_knn(base: DistanceMatrix, k: int, edge_weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths on the symmetric kNN graph of ``base`` with the
    given dense symmetric edge-weight matrix; inf marks disconnected pairs."""
    g = symmetric_knn_graph(exact_knn(base, k))
    src = np.repeat(np.arange(g.n), np.diff(g.indptr))
    w = edge_weights[src, g.indices]
    out = np.empty((g.n, g.n))
    _dijkstra_all(g.indptr, g.indices, w, out)
    out = np.minimum(out, out.T)
    np.fill_diagonal(out, 0.0)
    return out


def _floyd_warshall(weights: np.ndarray) -> np.ndarray:
    m = weights.copy()
    np.fill_diagonal(m, 0.0)
    for k in range(m.shape[0]):
        np.minimum(m, m[:, k : k + 1] + m[k : k + 1, :], out=m)
    return m


def fermat(
    data: PointCloud | DistanceMatrix, p: float, k: int | None = None
) -> DistanceMatrix:
    """Shortest paths over edge weights d^p (density-exaggerating distance).

    By default paths run over the complete graph; pass ``k`` to restrict them
    to the symmetric kNN graph (disconnected pairs become inf).
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    base = as_base_distance(data)
    w = base.values**p
    if k is None:
        vals = _floyd_warshall(w)
    else:
        vals = _shortest_paths_knn(base, k, w)
    vals = (vals + vals.T) / 2.0
    return DistanceMatrix(vals, squared=False)


def geodesic(data: PointCloud | DistanceMatrix, k: int) -> DistanceMatrix:
    """Shortest paths on the symmetric kNN graph with base-distance weights."""
    base = as_base_distance(data)
    vals = _shortest_paths_knn(base, k, base.values)
    return DistanceMatrix(vals, squared=False)


# ---------------------------------------------------------------------------
# density-based distances
# ---------------------------------------------------------------------------


def _knn_distances(base: DistanceMatrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    nb = exact_knn(base, k)
    rows = np.arange(base.n)[:, None]
    return nb, base.values[rows, nb]


def dtm_values(data: PointCloud | DistanceMatrix, k: int, p: float) -> np.ndarray:
    """Per-point distance-to-measure: the p-mean of the k nearest distances
    (p = inf gives the k-th neighbor distance)."""
    base = as_base_distance(data)
    if not 1 <= k <= base.n - 1:
        raise ValueError(f"k must be in [1, {base.n - 1}], got {k}")
    _, nd = _knn_distances(base, k)
    if np.isinf(p):
        return nd[:, -1].copy()
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return (np.mean(nd**p, axis=1)) ** (1.0 / p)


def dtm(
    data: PointCloud | DistanceMatrix, k: int, p: float = 2.0, xi: float = 1.0
) -> DistanceMatrix:
    """Outlier-robust distance combining per-point DTM values with the base
    distance; xi in {1, 2, inf} selects the closed-form interpolation."""
    base = as_base_distance(data)
    t = dtm_values(base, k, p)
    d = base.values
    a = t[:, None]
    b = t[None, :]
    hi = np.maximum(a, b)
    if np.isinf(xi):
        vals = np.maximum(hi, d / 2.0)
    elif xi == 1.0:
        cond = d <= np.abs(a - b)
        theta = (a + b + d) / 2.0
        vals = np.where(cond, hi, theta)
    elif xi == 2.0:
        cond = d**2 <= np.abs(a**2 - b**2)
        safe_d = np.where(d > 0, d, 1.0)
        theta = np.sqrt(((a + b) ** 2 + d**2) * ((a - b) ** 2 + d**2)) / (2.0 * safe_d)
        vals = np.where(cond | (d == 0), hi, theta)
    else:
        raise ValueError(f"xi must be 1, 2, or inf, got {xi}")
    vals = (vals + vals.T) / 2.0
    np.fill_diagonal(vals, 0.0)
    return DistanceMatrix(vals, squared=False)


def core_distance(data: PointCloud | DistanceMatrix, k: int) -> DistanceMatrix:
    """HDBSCAN-style core distance: max of the pair distance and both
    endpoints' k-th neighbor distances."""
    base = as_base_distance(data)
    if not 1 <= k <= base.n - 1:
        raise ValueError(f"k must be in [1, {base.n - 1}], got {k}")
    _, nd = _knn_distances(base, k)
    r = nd[:, -1]
    vals = np.maximum(base.values, np.maximum(r[:, None], r[None, :]))
    np.fill_diagonal(vals, 0.0)
    return DistanceMatrix(vals, squared=False)


# ---------------------------------------------------------------------------
# graph-affinity distances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffinityCalibration:
    """Per-point kernel scales and the worst calibration residual."""

    sigma: np.ndarray
    target: float
    max_residual: float


def _tsne_entropy_bits(sq_ndist: np.ndarray, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise perplexity exponent 2^H and conditional probabilities."""
    # shift by the row minimum before dividing so the largest logit is exactly
    # 0 even when sigma is tiny enough to overflow the quotient
    shifted = sq_ndist - sq_ndist.min(axis=1, keepdims=True)
    with np.errstate(over="ignore"):
        logits = -shifted / (2.0 * sigma[:, None] ** 2)
    w = np.exp(logits)
    z = w.sum(axis=1, keepdims=True)
    prob = w / z
    # H in bits; p log p -> 0 as p -> 0
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(prob > 0, prob * np.log2(prob), 0.0)
    h = -plogp.sum(axis=1)
    return 2.0**h, prob


def tsne_graph_distance(
    data: PointCloud | DistanceMatrix,
    perplexity: float,
    return_calibration: bool = False,
):
    """Negative log of symmetrized Gaussian kNN affinities (k = 3 * perplexity).

    Per-point bandwidths are bisected until each conditional distribution has
    the requested perplexity. Pairs outside the kNN graph get distance inf.
    """
    base = as_base_distance(data)
    n = base.n
    k = int(round(3 * perplexity))
    if not 2 <= k <= n - 1:
        raise ValueError(f"3*perplexity must be in [2, {n - 1}], got {k}")
    nb, nd = _knn_distances(base, k)
    sq = nd**2

    target = float(perplexity)
    lo = np.full(n, SIGMA_LO)
    hi = np.full(n, SIGMA_HI)
    perp_lo, _ = _tsne_entropy_bits(sq, lo)
    perp_hi, _ = _tsne_entropy_bits(sq, hi)
    bad = (perp_lo > target) | (perp_hi < target)
    if bad.any():
        raise ValueError(
            f"perplexity {target} not bracketed for point {int(np.flatnonzero(bad)[0])}"
        )
    sigma = np.empty(n)
    for _ in range(MAX_BISECTIONS):
        sigma = (lo + hi) / 2.0
        perp, _ = _tsne_entropy_bits(sq, sigma)
        high = perp > target
        hi = np.where(high, sigma, hi)
        lo = np.where(high, lo, sigma)
        if np.abs(perp - target).max() < CALIBRATION_TOL * 0.1:
            break
    perp, prob = _tsne_entropy_bits(sq, sigma)
    resid = float(np.abs(perp - target).max())
    if resid > CALIBRATION_TOL:
        raise ValueError(f"perplexity calibration residual {resid:.2e} exceeds {CALIBRATION_TOL}")

    cond = np.zeros((n, n))
    np.put_along_axis(cond, nb, prob, axis=1)
    pj = (cond + cond.T) / (2.0 * n)
    with np.errstate(divide="ignore"):
        vals = -np.log(pj)
    np.fill_diagonal(vals, 0.0)
    dm = DistanceMatrix(vals, squared=False)
    if return_calibration:
        return dm, AffinityCalibration(sigma, target, resid)
    return dm


def _umap_sums(nd: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(-(nd - mu[:, None]) / sigma[:, None]).sum(axis=1)


def umap_graph_distance(
    data: PointCloud | DistanceMatrix,
    k: int,
    return_calibration: bool = False,
):
    """Negative log of UMAP fuzzy-union membership strengths on the kNN graph.

    mu_i is the distance to the nearest non-identical neighbor; sigma_i is
    bisected so the local memberships sum to log2(k). Zero memberships map to
    distance inf.
    """
    base = as_base_distance(data)
    n = base.n
    if not 2 <= k <= n - 1:
        raise ValueError(f"k must be in [2, {n - 1}], got {k}")
    nb, nd = _knn_distances(base, k)
    positive = np.where(nd > 0, nd, np.inf)
    mu = positive.min(axis=1)
    if np.isinf(mu).any():
        bad = int(np.flatnonzero(np.isinf(mu))[0])
        raise ValueError(f"point {bad} has no non-identical neighbor among its {k} nearest")

    target = float(np.log2(k))
    lo = np.full(n, SIGMA_LO)
    hi = np.full(n, SIGMA_HI)
    f_lo = _umap_sums(nd, mu, lo)
    f_hi = _umap_sums(nd, mu, hi)
    bad = (f_lo > target) | (f_hi < target)
    if bad.any():
        raise ValueError(
            f"membership sum {target:.3f} not bracketed for point "
            f"{int(np.flatnonzero(bad)[0])}"
        )
    sigma = np.empty(n)
    for _ in range(MAX_BISECTIONS):
        sigma = (lo + hi) / 2.0
        f = _umap_sums(nd, mu, sigma)
        high = f > target
        hi = np.where(high, sigma, hi)
        lo = np.where(high, lo, sigma)
        if np.abs(f - target).max() < CALIBRATION_TOL * 0.1:
            break
    resid = float(np.abs(_umap_sums(nd, mu, sigma) - target).max())
    if resid > CALIBRATION_TOL:
        raise ValueError(f"UMAP calibration residual {resid:.2e} exceeds {CALIBRATION_TOL}")

    cond = np.zeros((n, n))
    np.put_along_axis(cond, nb, np.exp(-(nd - mu[:, None]) / sigma[:, None]), axis=1)
    member = cond + cond.T - cond * cond.T
    with np.errstate(divide="ignore"):
        vals = -np.log(member)
    np.fill_diagonal(vals, 0.0)
    dm = DistanceMatrix(vals, squared=False)
    if return_calibration:
        return dm, AffinityCalibration(sigma, target, resid)
    return dm


# ---------------------------------------------------------------------------
# preprocessing and cleanup
# ---------------------------------------------------------------------------


def pca_preprocess(pc: PointCloud, n_components: int, normalized: bool = False) -> PointCloud:
    """Project the centered cloud onto its leading principal components.

    Standard PCA keeps the first columns of U*S; normalized PCA keeps the
    first columns of U (all output columns then have unit norm).
    """
    limit = min(pc.n, pc.dim)
    if not 1 <= n_components <= limit:
        raise ValueError(f"n_components must be in [1, {limit}], got {n_components}")
    x = pc.points - pc.points.mean(axis=0, keepdims=True)
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    if normalized:
        return PointCloud(u[:, :n_components])
    return PointCloud(u[:, :n_components] * s[None, :n_components])


def finitize(dist: DistanceMatrix) -> DistanceMatrix:
    """Replace inf entries with twice the maximal finite distance."""
    v = dist.values
    mask = np.isinf(v)
    if not mask.any():
        return dist
    off = ~np.eye(dist.n, dtype=bool)
    finite = off & ~mask
    if not finite.any():
        raise ValueError("all off-diagonal distances are infinite")
    cap = 2.0 * v[finite].max()
    out = v.copy()
    out[mask] = cap
    return DistanceMatrix(out, squared=dist.squared)

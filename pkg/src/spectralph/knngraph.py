"""Exact k-nearest-neighbor lists, the symmetric kNN graph, connected
components, and graph Laplacians.

The graph keeps both a dense adjacency (for the dense spectral solvers) and a
CSR view (for the compiled shortest-path kernels). Everything is immutable
after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dmatrix import DistanceMatrix

DEGREE_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetric weighted graph without self-loops."""

    adjacency: np.ndarray
    n: int = field(init=False)
    degrees: np.ndarray = field(init=False)
    volume: float = field(init=False)
    component_labels: np.ndarray = field(init=False)
    component_count: int = field(init=False)
    # CSR of the symmetric adjacency (both edge directions stored)
    indptr: np.ndarray = field(init=False)
    indices: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("adjacency has non-finite entries")
        if (a < 0).any():
            raise ValueError("adjacency has negative weights")
        if not np.array_equal(a, a.T):
            if np.abs(a - a.T).max() > 1e-9:
                raise ValueError("adjacency is not symmetric")
            a = (a + a.T) / 2.0
        if np.abs(np.diagonal(a)).max(initial=0.0) != 0.0:
            raise ValueError("adjacency has self-loops")
        a = a.copy()
        degrees = a.sum(axis=1)
        indptr = np.zeros(a.shape[0] + 1, dtype=np.int64)
        rows, cols = np.nonzero(a)
        indptr[1:] = np.bincount(rows, minlength=a.shape[0]).cumsum()
        labels, count = _components_csr(indptr, cols)

        object.__setattr__(self, "adjacency", _freeze(a))
        object.__setattr__(self, "n", a.shape[0])
        object.__setattr__(self, "degrees", _freeze(degrees))
        object.__setattr__(self, "volume", float(degrees.sum()))
        object.__setattr__(self, "component_labels", _freeze(labels))
        object.__setattr__(self, "component_count", int(count))
        object.__setattr__(self, "indptr", _freeze(indptr))
        object.__setattr__(self, "indices", _freeze(cols.astype(np.int64)))
        object.__setattr__(self, "weights", _freeze(a[rows, cols]))

    def subgraph(self, nodes: np.ndarray) -> "NeighborGraph":
        nodes = np.asarray(nodes)
        return NeighborGraph(self.adjacency[np.ix_(nodes, nodes)])

    def edge_list(self) -> np.ndarray:
        """Unique undirected edges as rows (i, j, weight) with i < j."""
        iu, ju = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([iu, ju, self.adjacency[iu, ju]])


def _components_csr(indptr: np.ndarray, indices: np.ndarray) -> tuple[np.ndarray, int]:
    n = indptr.shape[0] - 1
    labels = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    count = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = count
        stack[0] = start
        top = 1
        while top:
            top -= 1
            u = stack[top]
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if labels[v] < 0:
                    labels[v] = count
                    stack[top] = v
                    top += 1
        count += 1
    return labels, count


def exact_knn(dist: DistanceMatrix, k: int) -> np.ndarray:
    """Per point, the indices of its k nearest neighbors sorted by distance.

    The point itself is excluded; ties are broken by ascending index (stable
    sort). Exact duplicates (distance 0) are legal neighbors.
    """
    n = dist.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    v = dist.values.copy()
    np.fill_diagonal(v, np.inf)
    order = np.argsort(v, axis=1, kind="stable")
    return np.ascontiguousarray(order[:, :k])


def symmetric_knn_graph(
    neighbors: np.ndarray, weights: DistanceMatrix | None = None
) -> NeighborGraph:
    """Graph with edge ij iff j is among i's k nearest neighbors or vice versa.

    Unweighted edges get weight 1; with ``weights`` given, each edge carries
    the inverse of its distance instead.
    """
    neighbors = np.asarray(neighbors)
    n = neighbors.shape[0]
    a = np.zeros((n, n))
    rows = np.repeat(np.arange(n), neighbors.shape[1])
    a[rows, neighbors.ravel()] = 1.0
    a = np.maximum(a, a.T)
    np.fill_diagonal(a, 0.0)
    if weights is not None:
        if weights.n != n:
            raise ValueError(f"weights are {weights.n}x{weights.n}, graph has {n} nodes")
        mask = a > 0
        d = weights.values[mask]
        if (d == 0).any():
            i, j = np.nonzero(mask)
            z = np.flatnonzero(d == 0)[0]
            raise ValueError(f"zero distance on edge ({i[z]}, {j[z]}) in weighted mode")
        a[mask] = 1.0 / d
    return NeighborGraph(a)


def connected_components(g: NeighborGraph) -> tuple[np.ndarray, int]:
    return g.component_labels, g.component_count


def laplacians(g: NeighborGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(L, L_sym, P): unnormalized and symmetric normalized Laplacians plus
    the random-walk transition matrix. Requires every node to have degree > 0."""
    deg = g.degrees
    if (deg <= 0).any():
        bad = int(np.flatnonzero(deg <= 0)[0])
        raise ValueError(f"node {bad} is isolated (degree 0)")
    a = g.adjacency
    lap = np.diag(deg) - a
    inv_sqrt = 1.0 / np.sqrt(deg)
    asym = a * inv_sqrt[:, None] * inv_sqrt[None, :]
    asym = (asym + asym.T) / 2.0
    lsym = np.eye(g.n) - asym
    p = a / deg[:, None]
    return lap, lsym, p

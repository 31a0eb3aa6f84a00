"""Shared test helpers: small graph builders and independent oracles."""

import numpy as np

from spectralph import NeighborGraph
from spectralph.dmatrix import DistanceMatrix, pairwise_sq_euclidean


def graph_from_edges(n, edges, weights=None):
    a = np.zeros((n, n))
    for idx, (u, v) in enumerate(edges):
        w = 1.0 if weights is None else weights[idx]
        a[u, v] = a[v, u] = w
    return NeighborGraph(a)


def chain_graph(n):
    return graph_from_edges(n, [(i, i + 1) for i in range(n - 1)])


def triangle_chain_graph():
    """Triangle 0-1-2 with a chain 2-3-4 hanging off it."""
    return graph_from_edges(5, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)])


def random_connected_graph(rng, n, p=0.3, nonbipartite=False):
    """Erdos-Renyi-ish graph forced connected via a random spanning path."""
    a = (rng.uniform(size=(n, n)) < p).astype(float)
    a = np.triu(a, 1)
    a = a + a.T
    perm = rng.permutation(n)
    for i in range(n - 1):
        a[perm[i], perm[i + 1]] = a[perm[i + 1], perm[i]] = 1.0
    if nonbipartite:
        a[perm[0], perm[1]] = a[perm[1], perm[0]] = 1.0
        a[perm[1], perm[2]] = a[perm[2], perm[1]] = 1.0
        a[perm[0], perm[2]] = a[perm[2], perm[0]] = 1.0
    np.fill_diagonal(a, 0.0)
    return NeighborGraph(a)


def random_distance_matrix(rng, n, dim=3, ties=False):
    pts = rng.normal(size=(n, dim))
    d = np.sqrt(pairwise_sq_euclidean(pts))
    if ties:
        q = 0.4
        d = np.ceil(d / q) * q
        d = (d + d.T) / 2.0
        np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def floyd_warshall(weights):
    """Dense all-pairs shortest-path oracle."""
    m = weights.copy()
    n = m.shape[0]
    np.fill_diagonal(m, 0.0)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = m[i, k] + m[k, j]
                if via < m[i, j]:
                    m[i, j] = via
    return m


def naive_rips_diagram(values, max_dim):
    """Independent persistence oracle: classic left-to-right reduction of the
    full boundary matrix, with columns held as python-int bitmasks.

    Returns the multiset of (dim, birth, death) with positive persistence,
    death = inf for unpaired simplices. Usable up to n ~ 15.
    """
    from itertools import combinations

    n = values.shape[0]
    simplices = []
    for dim in range(max_dim + 2):
        for vs in combinations(range(n), dim + 1):
            diam = max((values[a, b] for a, b in combinations(vs, 2)), default=0.0)
            simplices.append((diam, dim, vs))
    simplices.sort(key=lambda s: (s[0], s[1], s[2]))
    index = {s[2]: i for i, s in enumerate(simplices)}

    columns = []
    for diam, dim, vs in simplices:
        mask = 0
        if dim > 0:
            for omit in range(len(vs)):
                mask |= 1 << index[vs[:omit] + vs[omit + 1 :]]
        columns.append(mask)

    low_to_col = {}
    pairs = []
    paired = set()
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            other = low_to_col.get(low)
            if other is None:
                low_to_col[low] = j
                pairs.append((low, j))
                paired.add(low)
                paired.add(j)
                break
            col ^= columns[other]
        columns[j] = col

    out = []
    for i, j in pairs:
        birth, dim, _ = simplices[i]
        death = simplices[j][0]
        if death > birth:
            out.append((dim, birth, death))
    for i, (birth, dim, _) in enumerate(simplices):
        if i not in paired and dim <= max_dim:
            out.append((dim, birth, float("inf")))
    return sorted(out)


def bfs_components(adjacency):
    """Breadth-first-search component labels, independent of the library."""
    n = adjacency.shape[0]
    labels = np.full(n, -1)
    count = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        queue = [start]
        labels[start] = count
        while queue:
            u = queue.pop(0)
            for v in range(n):
                if adjacency[u, v] > 0 and labels[v] < 0:
                    labels[v] = count
                    queue.append(v)
        count += 1
    return labels, count

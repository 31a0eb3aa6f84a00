"""Vietoris-Rips persistent homology over GF(2) for loops and voids.

``rips_persistence`` runs the compiled cohomology reduction; the filtration
includes a simplex once all its pairwise distances are at most the scale. By
default the filtration is capped at the enclosing radius min_i max_j d_ij,
which provably preserves every finite feature of dimension >= 1 (the complex
becomes a cone there). ``brute_force_betti`` is the independent oracle: it
materializes the whole clique complex at one scale and ranks its boundary
matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _ripskernel as rk
from .dmatrix import DistanceMatrix

BETTI_ORACLE_MAX_N = 10


@dataclass(frozen=True)
class PersistenceFeature:
    """One homological feature: born at ``birth``, filled in at ``death``.

    ``death`` is inf for classes that outlive the filtration threshold (never
    happens with the default enclosing-radius cap). For dim-1 features the
    birth edge is recorded so a representative cycle can be reconstructed.
    """

    dim: int
    birth: float
    death: float
    birth_simplex: tuple[int, ...] | None = None

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class PersistenceDiagram:
    features: tuple[PersistenceFeature, ...]
    max_dim: int
    threshold: float

    def in_dim(self, dim: int) -> tuple[PersistenceFeature, ...]:
        return tuple(f for f in self.features if f.dim == dim)

    def persistences(self, dim: int) -> np.ndarray:
        """Persistence values of dim-features, descending."""
        p = np.array([f.persistence for f in self.in_dim(dim)], dtype=np.float64)
        return np.sort(p)[::-1]

    def betti_at(self, tau: float, dim: int) -> int:
        """Number of dim-features alive at scale tau (birth <= tau < death)."""
        return sum(1 for f in self.in_dim(dim) if f.birth <= tau < f.death)


@dataclass(frozen=True)
class RepresentativeCycle:
    """A GF(2) 1-cycle for a dim-1 feature; every vertex has even incidence
    and every edge length is at most the feature's birth time."""

    feature: PersistenceFeature
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        inc: dict[int, int] = {}
        for u, v in self.edges:
            inc[u] = inc.get(u, 0) + 1
            inc[v] = inc.get(v, 0) + 1
        if any(c % 2 for c in inc.values()):
            raise ValueError("edge set is not a GF(2) cycle")


def _as_values(dist) -> np.ndarray:
    if isinstance(dist, DistanceMatrix):
        v = dist.values
    else:
        v = np.asarray(dist, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"distance matrix must be square, got {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("distances must be finite; run finitize first")
    if (v < 0).any():
        raise ValueError("distances must be nonnegative")
    if not np.array_equal(v, v.T):
        raise ValueError("distance matrix must be symmetric")
    if np.abs(np.diagonal(v)).max(initial=0.0) != 0.0:
        raise ValueError("distance matrix must have zero diagonal")
    return v


def enclosing_radius(values: np.ndarray) -> float:
    """min_i max_j d_ij: the smallest cap that keeps all finite features."""
    return float(np.max(values, axis=1).min())


def _map_capacity(entries: int) -> int:
    cap = max(2 * entries + 1, 17)
    return cap if cap % 2 else cap + 1


def rips_persistence(
    dist,
    max_dim: int = 1,
    threshold: float | None = None,
    include_h0: bool = False,
) -> PersistenceDiagram:
    """Persistence diagram of the Vietoris-Rips filtration of ``dist``.

    ``max_dim`` 1 or 2 selects the highest homology dimension. H0 features
    are only reported with ``include_h0=True`` (they are a debugging aid; the
    scores use dims 1 and 2). Zero-persistence pairs are dropped.
    """
    if max_dim not in (1, 2):
        raise ValueError(f"max_dim must be 1 or 2, got {max_dim}")
    v = _as_values(dist)
    n = v.shape[0]
    if threshold is None:
        threshold = enclosing_radius(v)
    threshold = float(threshold)

    iu, ju = np.triu_indices(n, k=1)
    ediam = v[iu, ju]
    keep = ediam <= threshold
    iu, ju, ediam = iu[keep], ju[keep], ediam[keep]
    elex = iu.astype(np.int64) * n + ju
    order = np.lexsort((elex, ediam))
    eu = np.ascontiguousarray(iu[order].astype(np.int64))
    ev = np.ascontiguousarray(ju[order].astype(np.int64))
    ed = np.ascontiguousarray(ediam[order])

    is_tree, merge_deaths = rk._union_find_pairs(n, eu, ev, ed)

    features: list[PersistenceFeature] = []
    if include_h0:
        for death in merge_deaths:
            if death > 0:
                features.append(PersistenceFeature(0, 0.0, float(death)))
        for _ in range(n - merge_deaths.shape[0]):
            features.append(PersistenceFeature(0, 0.0, math.inf))

    # dimension 1: reduce the non-tree edge columns, newest first
    cols = np.flatnonzero(~is_tree)[::-1].copy()
    ca = eu[cols]
    cb = ev[cols]
    cc = np.full(cols.shape[0], -1, np.int64)
    cdiam = ed[cols]
    cap = _map_capacity(cols.shape[0])
    tri_keys = np.full(cap, -1, np.int64)
    tri_vals = np.zeros(cap, np.int64)
    births, deaths, pcols, ess = rk._reduce_columns(
        v, threshold, n, ca, cb, cc, cdiam, tri_keys, tri_vals
    )
    for b, d, c in zip(births, deaths, pcols):
        features.append(
            PersistenceFeature(1, float(b), float(d), (int(ca[c]), int(cb[c])))
        )
    for c in ess:
        features.append(
            PersistenceFeature(1, float(cdiam[c]), math.inf, (int(ca[c]), int(cb[c])))
        )

    if max_dim == 2:
        count = rk._count_triangles(v, threshold, n)
        ta = np.empty(count, np.int64)
        tb = np.empty(count, np.int64)
        tc = np.empty(count, np.int64)
        td = np.empty(count, np.float64)
        rk._fill_triangles(v, threshold, n, ta, tb, tc, td)
        keep = rk._filter_cleared(ta, tb, tc, n, tri_keys, tri_vals)
        ta, tb, tc, td = ta[keep], tb[keep], tc[keep], td[keep]
        tlex = (ta * n + tb) * n + tc
        torder = np.lexsort((tlex, td))[::-1]
        ta = np.ascontiguousarray(ta[torder])
        tb = np.ascontiguousarray(tb[torder])
        tc = np.ascontiguousarray(tc[torder])
        td = np.ascontiguousarray(td[torder])
        cap2 = _map_capacity(ta.shape[0])
        tet_keys = np.full(cap2, -1, np.int64)
        tet_vals = np.zeros(cap2, np.int64)
        births2, deaths2, pcols2, ess2 = rk._reduce_columns(
            v, threshold, n, ta, tb, tc, td, tet_keys, tet_vals
        )
        for b, d, c in zip(births2, deaths2, pcols2):
            features.append(
                PersistenceFeature(
                    2, float(b), float(d), (int(ta[c]), int(tb[c]), int(tc[c]))
                )
            )
        for c in ess2:
            features.append(
                PersistenceFeature(
                    2, float(td[c]), math.inf, (int(ta[c]), int(tb[c]), int(tc[c]))
                )
            )

    key = lambda f: (f.dim, f.birth, f.death, f.birth_simplex or ())
    return PersistenceDiagram(tuple(sorted(features, key=key)), max_dim, threshold)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def _gf2_rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    m = (mat % 2).astype(np.uint8)
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = -1
        for r in range(rank, rows):
            if m[r, c]:
                pivot = r
                break
        if pivot < 0:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        hits = np.flatnonzero(m[:, c]).tolist()
        for r in hits:
            if r != rank:
                m[r] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def brute_force_betti(dist, tau: float, max_dim: int = 2) -> tuple[int, ...]:
    """Betti numbers (b0, b1[, b2]) of the clique complex at scale tau.

    Builds every simplex up to dimension max_dim + 1 and ranks the GF(2)
    boundary matrices; intentionally limited to n <= 10 points.
    """
    if max_dim not in (1, 2):
        raise ValueError(f"max_dim must be 1 or 2, got {max_dim}")
    v = _as_values(dist)
    n = v.shape[0]
    if n > BETTI_ORACLE_MAX_N:
        raise ValueError(f"oracle limited to n <= {BETTI_ORACLE_MAX_N}, got {n}")

    def diameter(simplex) -> float:
        return max((v[a, b] for a, b in combinations(simplex, 2)), default=0.0)

    simplices: list[list[tuple[int, ...]]] = []
    for dim in range(max_dim + 2):
        level = [s for s in combinations(range(n), dim + 1) if diameter(s) <= tau]
        simplices.append(level)

    def boundary(lower: list, upper: list) -> np.ndarray:
        index = {s: i for i, s in enumerate(lower)}
        mat = np.zeros((len(lower), len(upper)), dtype=np.uint8)
        for j, s in enumerate(upper):
            for omit in range(len(s)):
                face = s[:omit] + s[omit + 1 :]
                mat[index[face], j] = 1
        return mat

    ranks = [0]  # rank of d_0 (the zero map)
    for dim in range(1, max_dim + 2):
        ranks.append(_gf2_rank(boundary(simplices[dim - 1], simplices[dim])))

    betti = []
    for dim in range(max_dim + 1):
        kernel = len(simplices[dim]) - ranks[dim]
        betti.append(kernel - ranks[dim + 1])
    return tuple(betti)


# ---------------------------------------------------------------------------
# representative cycles
# ---------------------------------------------------------------------------


def representative_cycle(dist, feature: PersistenceFeature) -> RepresentativeCycle:
    """A cycle of the feature's class at its birth time.

    The birth edge closes a loop against a path of strictly earlier edges (by
    the (diameter, lexicographic) simplex order); the returned cycle is the
    birth edge plus a breadth-first such path. Representatives are only
    defined for dim-1 features.
    """
    if feature.dim != 1:
        raise ValueError(f"representative cycles exist for dim-1 features, got dim {feature.dim}")
    if feature.birth_simplex is None:
        raise ValueError("feature does not carry its birth edge")
    v = _as_values(dist)
    n = v.shape[0]
    u0, v0 = feature.birth_simplex
    b = feature.birth
    lex0 = u0 * n + v0

    def allowed(i: int, j: int) -> bool:
        if i > j:
            i, j = j, i
        d = v[i, j]
        return d < b or (d == b and i * n + j < lex0)

    # BFS from u0 to v0 over strictly earlier edges
    prev = np.full(n, -1, np.int64)
    seen = np.zeros(n, bool)
    seen[u0] = True
    frontier = [u0]
    while frontier and not seen[v0]:
        nxt = []
        for x in frontier:
            for y in range(n):
                if not seen[y] and y != x and allowed(x, y):
                    seen[y] = True
                    prev[y] = x
                    nxt.append(y)
        frontier = nxt
    if not seen[v0]:
        raise RuntimeError("no path below the birth edge; inconsistent feature")
    edges = [(min(u0, v0), max(u0, v0))]
    y = v0
    while y != u0:
        x = int(prev[y])
        edges.append((min(x, y), max(x, y)))
        y = x
    return RepresentativeCycle(feature, tuple(edges))


# ---------------------------------------------------------------------------
# diagram CSV
# ---------------------------------------------------------------------------


def write_diagram_csv(path, diagram: PersistenceDiagram) -> None:
    with open(path, "w") as fh:
        fh.write("# spectralph diagram v1\n")
        fh.write("dim,birth,death\n")
        for f in diagram.features:
            fh.write(f"{f.dim},{f.birth!r},{f.death!r}\n")


def read_diagram_csv(path) -> PersistenceDiagram:
    features = []
    max_dim = 1
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("dim,"):
                continue
            dim_s, birth_s, death_s = line.split(",")
            f = PersistenceFeature(int(dim_s), float(birth_s), float(death_s))
            max_dim = max(max_dim, f.dim)
            features.append(f)
    return PersistenceDiagram(tuple(features), max_dim, math.nan)

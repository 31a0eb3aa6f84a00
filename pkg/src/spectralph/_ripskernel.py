"""Compiled kernels for Vietoris-Rips persistence.

The reduction follows the persistent-cohomology scheme: for each homology
dimension p, the coboundary columns of the p-simplices are reduced in reverse
filtration order, with cofacets generated on the fly (never materialized) and
kept in a lazy binary heap where GF(2) pairs cancel. Pivots of the reduced
columns are exactly the persistence pairs; pivot simplices of dimension p+1
are skipped ("cleared") in the next dimension's reduction.

Simplices are ordered by (diameter, dimension, lexicographic vertex tuple);
the lexicographic rank of a sorted tuple (v0,...,vp) is sum(v_i * n^(p-i)),
which fits in int64 up to the 4-tuples used here.
"""

import numpy as np

from ._accel import njit


@njit(cache=True)
def _map_get(keys, vals, key):
    cap = keys.shape[0]
    i = key % cap
    while True:
        k = keys[i]
        if k == key:
            return vals[i]
        if k == -1:
            return np.int64(-1)
        i += 1
        if i == cap:
            i = 0


@njit(cache=True)
def _map_set(keys, vals, key, val):
    cap = keys.shape[0]
    i = key % cap
    while keys[i] != -1:
        i += 1
        if i == cap:
            i = 0
    keys[i] = key
    vals[i] = val


@njit(cache=True)
def _heap_push(hd, hk, hsize, d, key):
    i = hsize
    while i > 0:
        p = (i - 1) >> 1
        if hd[p] > d or (hd[p] == d and hk[p] > key):
            hd[i] = hd[p]
            hk[i] = hk[p]
            i = p
        else:
            break
    hd[i] = d
    hk[i] = key
    return hsize + 1


@njit(cache=True)
def _heap_remove_top(hd, hk, hsize):
    hsize -= 1
    if hsize == 0:
        return 0
    d = hd[hsize]
    key = hk[hsize]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= hsize:
            break
        if c + 1 < hsize and (
            hd[c + 1] < hd[c] or (hd[c + 1] == hd[c] and hk[c + 1] < hk[c])
        ):
            c += 1
        if hd[c] < d or (hd[c] == d and hk[c] < key):
            hd[i] = hd[c]
            hk[i] = hk[c]
            i = c
        else:
            break
    hd[i] = d
    hk[i] = key
    return hsize


@njit(cache=True)
def _pop_pivot(hd, hk, hsize):
    """Pop the minimal entry after cancelling GF(2) duplicate pairs.

    Returns (found, diam, key, new_size)."""
    if hsize == 0:
        return False, 0.0, np.int64(-1), 0
    pd = hd[0]
    pk = hk[0]
    hsize = _heap_remove_top(hd, hk, hsize)
    while hsize > 0 and hk[0] == pk:
        hsize = _heap_remove_top(hd, hk, hsize)  # cancels the popped copy
        if hsize == 0:
            return False, 0.0, np.int64(-1), 0
        pd = hd[0]
        pk = hk[0]
        hsize = _heap_remove_top(hd, hk, hsize)
    return True, pd, pk, hsize


@njit(cache=True)
def _push_cofacets(dist, threshold, n, sd, a, b, c, hd, hk, hsize):
    """Push cofacets of edge (a,b) (c == -1) or triangle (a,b,c) within the
    threshold. Returns possibly reallocated heap arrays."""
    if hsize + n > hd.shape[0]:
        ncap = max(2 * hd.shape[0], hsize + n + 16)
        nhd = np.empty(ncap, np.float64)
        nhk = np.empty(ncap, np.int64)
        nhd[:hsize] = hd[:hsize]
        nhk[:hsize] = hk[:hsize]
        hd = nhd
        hk = nhk
    if c < 0:
        for w in range(n):
            if w == a or w == b:
                continue
            cd = dist[a, w]
            t = dist[b, w]
            if t > cd:
                cd = t
            if sd > cd:
                cd = sd
            if cd > threshold:
                continue
            if w < a:
                key = (w * n + a) * n + b
            elif w < b:
                key = (a * n + w) * n + b
            else:
                key = (a * n + b) * n + w
            hsize = _heap_push(hd, hk, hsize, cd, key)
    else:
        for w in range(n):
            if w == a or w == b or w == c:
                continue
            cd = dist[a, w]
            t = dist[b, w]
            if t > cd:
                cd = t
            t = dist[c, w]
            if t > cd:
                cd = t
            if sd > cd:
                cd = sd
            if cd > threshold:
                continue
            if w < a:
                key = ((w * n + a) * n + b) * n + c
            elif w < b:
                key = ((a * n + w) * n + b) * n + c
            elif w < c:
                key = ((a * n + b) * n + w) * n + c
            else:
                key = ((a * n + b) * n + c) * n + w
            hsize = _heap_push(hd, hk, hsize, cd, key)
    return hd, hk, hsize


@njit(cache=True)
def _reduce_columns(dist, threshold, n, ca, cb, cc, cdiam, map_keys, map_vals):
    """Reduce p-simplex coboundary columns given in reverse filtration order.

    Fills the pivot registry and returns (births, deaths, column_index) for
    the finite pairs plus the column indices of essential classes.
    """
    ncols = ca.shape[0]
    pair_birth = np.empty(ncols, np.float64)
    pair_death = np.empty(ncols, np.float64)
    pair_col = np.empty(ncols, np.int64)
    npairs = 0
    ess_col = np.empty(ncols if ncols > 0 else 1, np.int64)
    ness = 0

    v_start = np.zeros(ncols if ncols > 0 else 1, np.int64)
    v_len = np.zeros(ncols if ncols > 0 else 1, np.int64)
    pool = np.empty(4 * ncols + 64, np.int64)
    cursor = 0

    hd = np.empty(4 * n + 16, np.float64)
    hk = np.empty(4 * n + 16, np.int64)
    vloc = np.empty(256, np.int64)

    for j in range(ncols):
        hsize = 0
        vloc[0] = j
        vn = 1
        hd, hk, hsize = _push_cofacets(
            dist, threshold, n, cdiam[j], ca[j], cb[j], cc[j], hd, hk, hsize
        )
        while True:
            found, pd, pk, hsize = _pop_pivot(hd, hk, hsize)
            if not found:
                ess_col[ness] = j
                ness += 1
                break
            slot = _map_get(map_keys, map_vals, pk)
            if slot == -1:
                _map_set(map_keys, map_vals, pk, j)
                arr = np.sort(vloc[:vn])
                w = 0
                i = 0
                while i < vn:
                    if i + 1 < vn and arr[i + 1] == arr[i]:
                        i += 2
                    else:
                        arr[w] = arr[i]
                        w += 1
                        i += 1
                if cursor + w > pool.shape[0]:
                    ncap = max(2 * pool.shape[0], cursor + w + 64)
                    npool = np.empty(ncap, np.int64)
                    npool[:cursor] = pool[:cursor]
                    pool = npool
                v_start[j] = cursor
                v_len[j] = w
                pool[cursor : cursor + w] = arr[:w]
                cursor += w
                if pd > cdiam[j]:
                    pair_birth[npairs] = cdiam[j]
                    pair_death[npairs] = pd
                    pair_col[npairs] = j
                    npairs += 1
                break
            # collision: restore the popped pivot, then add the registered column
            hsize = _heap_push(hd, hk, hsize, pd, pk)
            s = v_start[slot]
            ln = v_len[slot]
            for q in range(ln):
                vv = pool[s + q]
                if vn == vloc.shape[0]:
                    nv = np.empty(2 * vn, np.int64)
                    nv[:vn] = vloc
                    vloc = nv
                vloc[vn] = vv
                vn += 1
                hd, hk, hsize = _push_cofacets(
                    dist, threshold, n, cdiam[vv], ca[vv], cb[vv], cc[vv], hd, hk, hsize
                )
    return (
        pair_birth[:npairs],
        pair_death[:npairs],
        pair_col[:npairs],
        ess_col[:ness],
    )


@njit(cache=True)
def _union_find_pairs(n, eu, ev, ed):
    """Kruskal pass over edges sorted in filtration order.

    Returns (is_tree, merge_deaths): which edges merged two components and
    the filtration value at each merge."""
    parent = np.arange(n)
    is_tree = np.zeros(eu.shape[0], np.bool_)
    deaths = np.empty(n if n > 0 else 1, np.float64)
    nd = 0
    for e in range(eu.shape[0]):
        ru = eu[e]
        while parent[ru] != ru:
            ru = parent[ru]
        rv = ev[e]
        while parent[rv] != rv:
            rv = parent[rv]
        # path compression
        u = eu[e]
        while parent[u] != ru:
            nxt = parent[u]
            parent[u] = ru
            u = nxt
        v = ev[e]
        while parent[v] != rv:
            nxt = parent[v]
            parent[v] = rv
            v = nxt
        if ru != rv:
            parent[ru] = rv
            is_tree[e] = True
            deaths[nd] = ed[e]
            nd += 1
    return is_tree, deaths[:nd]


@njit(cache=True)
def _count_triangles(dist, threshold, n):
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            dij = dist[i, j]
            if dij > threshold:
                continue
            for k in range(j + 1, n):
                cd = dij
                t = dist[i, k]
                if t > cd:
                    cd = t
                t = dist[j, k]
                if t > cd:
                    cd = t
                if cd <= threshold:
                    count += 1
    return count


@njit(cache=True)
def _fill_triangles(dist, threshold, n, ta, tb, tc, td):
    pos = 0
    for i in range(n):
        for j in range(i + 1, n):
            dij = dist[i, j]
            if dij > threshold:
                continue
            for k in range(j + 1, n):
                cd = dij
                t = dist[i, k]
                if t > cd:
                    cd = t
                t = dist[j, k]
                if t > cd:
                    cd = t
                if cd <= threshold:
                    ta[pos] = i
                    tb[pos] = j
                    tc[pos] = k
                    td[pos] = cd
                    pos += 1


@njit(cache=True)
def _filter_cleared(ta, tb, tc, n, map_keys, map_vals):
    """Mark triangles that appear as pivots in the lower reduction."""
    keep = np.ones(ta.shape[0], np.bool_)
    for q in range(ta.shape[0]):
        key = (ta[q] * n + tb[q]) * n + tc[q]
        if _map_get(map_keys, map_vals, key) != -1:
            keep[q] = False
    return keep

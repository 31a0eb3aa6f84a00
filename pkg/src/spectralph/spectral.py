"""Spectral distances on a neighbor graph.

Everything here is driven by the eigendecomposition of the symmetric
normalized Laplacian L_sym = I - D^{-1/2} A D^{-1/2}. Effective resistance
and diffusion distance each have two independent computation routes (a direct
matrix route and a spectral-embedding route) that must agree; the tests lean
on that redundancy.

Effective resistance is a *squared* Euclidean distance and is returned in
squared form by default, which is how it is fed to persistence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dmatrix import DistanceMatrix, pairwise_sq_euclidean
from .knngraph import NeighborGraph, laplacians

RESIDUAL_TOL = 1e-6
ORTHO_TOL = 1e-8
ZERO_EIG_TOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full eigensystem of L_sym, eigenvalues ascending.

    The kernel basis is rotated so the first eigenvector is exactly
    D^{1/2} 1 / sqrt(vol(G)) (restricted to components when disconnected),
    which makes dropping the leading eigenvector valid in every spectral
    distance formula below.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column l is the eigenvector of eigenvalues[l]
    degrees: np.ndarray
    volume: float
    component_count: int
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _freeze(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _freeze(self.eigenvectors))
        object.__setattr__(self, "degrees", _freeze(self.degrees))
        object.__setattr__(self, "n", self.eigenvalues.shape[0])


def _canonical_sign(vecs: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so the largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs[None, :]


def eigendecompose(g: NeighborGraph) -> SpectralDecomposition:
    """Dense full-spectrum decomposition of L_sym.

    Raises if the reconstruction residual exceeds RESIDUAL_TOL or if the
    count of (numerically) zero eigenvalues disagrees with the number of
    graph components.
    """
    _, lsym, _ = laplacians(g)  # raises on isolated nodes
    evals, evecs = np.linalg.eigh(lsym)
    evals = evals.copy()
    evals[np.abs(evals) < ZERO_EIG_TOL] = 0.0

    k = g.component_count
    n_zero = int((evals < ZERO_EIG_TOL).sum())
    if n_zero != k:
        raise ValueError(
            f"found {n_zero} zero eigenvalue(s) of L_sym but the graph has "
            f"{k} component(s); components are not spectrally resolved"
        )
    if k < g.n and evals[k] <= ZERO_EIG_TOL:
        raise ValueError("spectral gap below tolerance after the kernel")

    # rotate the kernel so its first vector is D^{1/2} 1 / sqrt(vol)
    u_star = np.sqrt(g.degrees / g.volume)
    z = evecs[:, :k]
    c = z.T @ u_star
    c = c / np.linalg.norm(c)
    w = -c
    w[0] += 1.0  # w = e1 - c
    wn = np.linalg.norm(w)
    if wn > 1e-14:
        h = np.eye(k) - 2.0 * np.outer(w, w) / (wn * wn)
        evecs = evecs.copy()
        evecs[:, :k] = z @ h
    evecs = _canonical_sign(evecs)

    resid = np.abs(lsym @ evecs - evecs * evals[None, :]).max()
    if resid > RESIDUAL_TOL:
        raise ValueError(f"eigendecomposition residual {resid:.2e} exceeds {RESIDUAL_TOL}")
    ortho = np.abs(evecs.T @ evecs - np.eye(g.n)).max()
    if ortho > ORTHO_TOL:
        raise ValueError(f"eigenvectors not orthonormal (deviation {ortho:.2e})")

    return SpectralDecomposition(
        eigenvalues=evals,
        eigenvectors=evecs,
        degrees=g.degrees.copy(),
        volume=g.volume,
        component_count=k,
    )


def _dec_for(g: NeighborGraph, dec: SpectralDecomposition | None) -> SpectralDecomposition:
    return eigendecompose(g) if dec is None else dec


# ---------------------------------------------------------------------------
# diffusion distance
# ---------------------------------------------------------------------------


def _snap_tiny(d2: np.ndarray, rel: float = 1e-14) -> None:
    """Zero squared distances below numerical significance so sqrt does not
    turn cancellation noise into ~1e-8 pseudo-distances for identical rows."""
    cut = rel * d2.max(initial=0.0)
    if cut > 0:
        d2[d2 < cut] = 0.0


def diffusion_sq(dec: SpectralDecomposition, double_t: int) -> np.ndarray:
    """Squared diffusion distance at time double_t / 2, as a plain array.

    For odd ``double_t`` (half-integer times) this is a signed quantity: the
    spectral factors (1 - mu)^double_t can be negative. These values are only
    meaningful inside the series identities that relate diffusion distance to
    effective resistance and diffusion pseudotime.
    """
    if double_t < 0:
        raise ValueError(f"time must be >= 0, got {double_t / 2}")
    factors = (1.0 - dec.eigenvalues[1:]) ** int(double_t)
    coords = dec.eigenvectors[:, 1:] / np.sqrt(dec.degrees)[:, None]
    scaled = coords * factors[None, :]
    gram = scaled @ coords.T
    sq = np.einsum("ij,ij->i", scaled, coords)
    d2 = sq[:, None] + sq[None, :] - gram - gram.T
    d2 = (d2 + d2.T) / 2.0
    np.fill_diagonal(d2, 0.0)
    return d2 * dec.volume


def diffusion_distance(
    g: NeighborGraph,
    t: float,
    route: str = "spectral",
    dec: SpectralDecomposition | None = None,
    squared: bool = False,
) -> DistanceMatrix:
    """Distance between degree-reweighted t-step random-walk distributions.

    ``transition_matrix`` route: sqrt(vol) * ||(P^t_i - P^t_j) D^{-1/2}||
    for integer t. ``spectral`` route: the equivalent eigenvector form, which
    also accepts half-integer t; those yield a signed squared form and
    require ``squared=True``.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if route == "transition_matrix":
        if abs(t - round(t)) > 1e-9:
            raise ValueError(f"transition_matrix route needs integer t, got {t}")
        _, _, p = laplacians(g)
        pt = np.linalg.matrix_power(p, int(round(t)))
        m = pt / np.sqrt(g.degrees)[None, :]
        d2 = pairwise_sq_euclidean(m) * g.volume
        _snap_tiny(d2)
        return DistanceMatrix(d2 if squared else np.sqrt(d2), squared=squared)
    if route != "spectral":
        raise ValueError(f"unknown route {route!r}")

    double_t = round(2 * t)
    if abs(2 * t - double_t) > 1e-9:
        raise ValueError(f"spectral route needs t to be a multiple of 1/2, got {t}")
    d = _dec_for(g, dec)
    if d.eigenvalues[-1] > 2.0 - ZERO_EIG_TOL:
        warnings.warn(
            "graph is (nearly) bipartite: diffusion series in t do not converge",
            stacklevel=2,
        )
    d2 = diffusion_sq(d, double_t)
    if double_t % 2 == 1:
        if not squared:
            raise ValueError(
                "half-integer diffusion times give a signed squared form; "
                "pass squared=True"
            )
        return DistanceMatrix(d2, squared=True)
    np.clip(d2, 0.0, None, out=d2)
    _snap_tiny(d2)
    return DistanceMatrix(d2 if squared else np.sqrt(d2), squared=squared)


# ---------------------------------------------------------------------------
# effective resistance
# ---------------------------------------------------------------------------


def _per_component(g: NeighborGraph, block_fn) -> np.ndarray:
    """Evaluate block_fn(subgraph) per component; cross-component pairs stay inf."""
    out = np.full((g.n, g.n), np.inf)
    np.fill_diagonal(out, 0.0)
    for c in range(g.component_count):
        nodes = np.flatnonzero(g.component_labels == c)
        if nodes.size < 2:
            continue
        block = block_fn(g.subgraph(nodes))
        out[np.ix_(nodes, nodes)] = block
    return out


def _naive_block_pinv(sub: NeighborGraph) -> np.ndarray:
    lap, _, _ = laplacians(sub)
    m = np.linalg.pinv(lap)
    m = (m + m.T) / 2.0
    diag = np.diagonal(m)
    vals = diag[:, None] + diag[None, :] - 2.0 * m
    np.fill_diagonal(vals, 0.0)
    return vals


def _naive_block_spectral(sub: NeighborGraph) -> np.ndarray:
    d = eigendecompose(sub)
    coords = (
        dec_coords(d, 1.0 / np.sqrt(d.eigenvalues[1:]))
    )
    return pairwise_sq_euclidean(coords)


def dec_coords(dec: SpectralDecomposition, factors: np.ndarray) -> np.ndarray:
    """Rows e_i = (factors_l * u_{l,i})_{l>=2} / sqrt(d_i)."""
    return dec.eigenvectors[:, 1:] * factors[None, :] / np.sqrt(dec.degrees)[:, None]


def effective_resistance_naive(
    g: NeighborGraph,
    route: str = "pseudoinverse",
    dec: SpectralDecomposition | None = None,
) -> DistanceMatrix:
    """Commute-time resistance, per component, in squared form.

    Routes: ``pseudoinverse`` uses l+_ii - 2 l+_ij + l+_jj on the unnormalized
    Laplacian; ``spectral`` uses the 1/sqrt(mu) eigenvector embedding. Pairs
    in different components get inf (finite-ize downstream).
    """
    if route == "pseudoinverse":
        vals = _per_component(g, _naive_block_pinv)
    elif route == "spectral":
        if dec is not None and g.component_count == 1:
            vals = pairwise_sq_euclidean(dec_coords(dec, 1.0 / np.sqrt(dec.eigenvalues[1:])))
        else:
            vals = _per_component(g, _naive_block_spectral)
    else:
        raise ValueError(f"unknown route {route!r}")
    np.clip(vals, 0.0, None, out=vals)
    return DistanceMatrix(vals, squared=True)


def _apply_correction(vals: np.ndarray, g: NeighborGraph) -> np.ndarray:
    """naive -> corrected: subtract the local degree terms (no self-loops here)."""
    deg = g.degrees
    inv = 1.0 / deg
    corr = vals - inv[:, None] - inv[None, :] + 2.0 * g.adjacency * inv[:, None] * inv[None, :]
    np.fill_diagonal(corr, 0.0)
    return corr


def effective_resistance_corrected(
    g: NeighborGraph,
    route: str = "correction_formula",
    dec: SpectralDecomposition | None = None,
    sqrt: bool = False,
) -> DistanceMatrix:
    """Degree-corrected effective resistance (squared form).

    Routes: ``correction_formula`` corrects the pseudoinverse-based naive
    values; ``spectral`` uses the (1-mu)/sqrt(mu) eigenvector embedding.
    ``sqrt=True`` returns the element-wise square root, a monotone transform
    that only rescales persistence birth/death times.
    """
    if route == "correction_formula":
        naive = _per_component(g, _naive_block_pinv)
        vals = _apply_correction(naive, g)
    elif route == "spectral":

        def block(sub: NeighborGraph) -> np.ndarray:
            d = eigendecompose(sub)
            mu = d.eigenvalues[1:]
            return pairwise_sq_euclidean(dec_coords(d, (1.0 - mu) / np.sqrt(mu)))

        if dec is not None and g.component_count == 1:
            mu = dec.eigenvalues[1:]
            vals = pairwise_sq_euclidean(dec_coords(dec, (1.0 - mu) / np.sqrt(mu)))
        else:
            vals = _per_component(g, block)
    else:
        raise ValueError(f"unknown route {route!r}")

    finite = np.isfinite(vals)
    low = vals[finite].min(initial=0.0)
    if low < -1e-8:
        raise ValueError(f"corrected effective resistance came out negative ({low:.2e})")
    vals[finite & (vals < 0)] = 0.0
    if sqrt:
        return DistanceMatrix(np.sqrt(vals), squared=False)
    return DistanceMatrix(vals, squared=True)


# ---------------------------------------------------------------------------
# other spectral distances
# ---------------------------------------------------------------------------


def laplacian_eigenmaps_distance(dec: SpectralDecomposition, embed_dim: int) -> DistanceMatrix:
    """Euclidean distance in the first nontrivial eigenvector coordinates.

    The leading K component-indicator eigenvectors are discarded; the
    embedding uses columns K+1 .. K+embed_dim of the eigenvector matrix.
    """
    k = dec.component_count
    if not 1 <= embed_dim <= dec.n - k:
        raise ValueError(f"embed_dim must be in [1, {dec.n - k}], got {embed_dim}")
    coords = dec.eigenvectors[:, k : k + embed_dim]
    d2 = pairwise_sq_euclidean(coords)
    return DistanceMatrix(np.sqrt(d2), squared=False)


DPT_VARIANTS = ("rw", "sym", "symd")


def dpt_distance(
    dec: SpectralDecomposition, variant: str = "symd", squared: bool = False
) -> DistanceMatrix:
    """Diffusion-pseudotime distance with eigenvalue weight (1-mu)/mu.

    Variants differ in the eigenvectors used: ``sym`` takes u_l as is,
    ``symd`` takes D^{-1/2} u_l, and ``rw`` normalizes the latter to unit
    length. Requires a connected graph.
    """
    if variant not in DPT_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {DPT_VARIANTS}")
    if dec.component_count != 1:
        raise ValueError("diffusion pseudotime needs a connected graph")
    mu = dec.eigenvalues[1:]
    weights = (1.0 - mu) / mu
    vecs = dec.eigenvectors[:, 1:]
    if variant == "sym":
        v = vecs
    else:
        v = vecs / np.sqrt(dec.degrees)[:, None]
        if variant == "rw":
            v = v / np.linalg.norm(v, axis=0, keepdims=True)
    d2 = pairwise_sq_euclidean(v * weights[None, :])
    return DistanceMatrix(d2 if squared else np.sqrt(d2), squared=squared)


def potential_distance(g: NeighborGraph, t: int, clamp: float = 1e-12) -> DistanceMatrix:
    """Norm between element-wise logs of t-step transition rows.

    Transition probabilities below ``clamp`` are clamped before the log, so
    zeros (unreachable nodes at small t) stay finite.
    """
    if t < 1 or abs(t - round(t)) > 1e-9:
        raise ValueError(f"t must be a positive integer, got {t}")
    _, _, p = laplacians(g)
    pt = np.linalg.matrix_power(p, int(round(t)))
    logs = np.log(np.maximum(pt, clamp))
    d2 = pairwise_sq_euclidean(logs)
    return DistanceMatrix(np.sqrt(d2), squared=False)

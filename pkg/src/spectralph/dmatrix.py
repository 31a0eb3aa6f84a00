"""The square dissimilarity matrix that every distance producer hands to the
persistence engine.

Entries may be ``inf`` (e.g. between graph components); ``finitize`` in
:mod:`spectralph.basedist` replaces those before persistence is run. The
``squared`` flag records whether the values are squared distances (effective
resistance is used in squared form).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric n x n dissimilarities with zero diagonal.

    ``values`` is validated and stored read-only. Off-diagonal entries may be
    ``+inf`` (disconnected pairs awaiting finite-ization) but never NaN.
    """

    values: np.ndarray
    squared: bool = False
    n: int = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {v.shape}")
        if np.isnan(v).any():
            raise ValueError("distance matrix contains NaN")
        finite = np.isfinite(v)
        scale = np.abs(v[finite]).max() if finite.any() else 1.0
        with np.errstate(invalid="ignore"):  # inf - inf on sentinel pairs
            asym = np.abs(v - v.T)
        asymted = asym[np.isfinite(asym)]
        if asymted.size and asymted.max() > SYMMETRY_TOL * max(scale, 1.0):
            raise ValueError("distance matrix is not symmetric")
        if (v != v.T).any():
            # within tolerance: make symmetry exact
            v = (v + v.T) / 2.0
        if np.abs(np.diagonal(v)).max(initial=0.0) > SYMMETRY_TOL:
            raise ValueError("distance matrix diagonal must be zero")
        v = v.copy()
        np.fill_diagonal(v, 0.0)
        object.__setattr__(self, "values", _freeze(v))
        object.__setattr__(self, "n", v.shape[0])

    @property
    def has_infinite(self) -> bool:
        return bool(np.isinf(self.values).any())

    def with_values(self, values: np.ndarray, squared: bool | None = None) -> "DistanceMatrix":
        return DistanceMatrix(values, self.squared if squared is None else squared)


def pairwise_sq_euclidean(rows: np.ndarray) -> np.ndarray:
    """Exactly symmetric matrix of squared Euclidean distances between rows."""
    rows = np.asarray(rows, dtype=np.float64)
    sq = np.einsum("ij,ij->i", rows, rows)
    g = rows @ rows.T
    d2 = sq[:, None] + sq[None, :] - 2.0 * g
    d2 = (d2 + d2.T) / 2.0
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def write_distance_csv(path, dist: DistanceMatrix) -> None:
    """Lower-triangular CSV: header ``n=<n> squared=<0|1>``, then one row per
    point i >= 1 holding d(i,0),...,d(i,i-1)."""
    v = dist.values
    with open(path, "w") as fh:
        fh.write("# spectralph distances v1\n")
        fh.write(f"n={dist.n} squared={1 if dist.squared else 0}\n")
        for i in range(1, dist.n):
            fh.write(",".join(repr(float(x)) for x in v[i, :i]) + "\n")


def read_distance_csv(path) -> DistanceMatrix:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty distance file")
    header = lines[0]
    fields = dict(part.split("=", 1) for part in header.split())
    n = int(fields["n"])
    squared = fields.get("squared", "0") == "1"
    if len(lines) - 1 != max(n - 1, 0):
        raise ValueError(f"{path}: expected {n - 1} rows, found {len(lines) - 1}")
    v = np.zeros((n, n))
    for i, line in enumerate(lines[1:], start=1):
        row = [float(x) for x in line.split(",")] if line else []
        if len(row) != i:
            raise ValueError(f"{path}: row {i} has {len(row)} entries, expected {i}")
        v[i, :i] = row
        v[:i, i] = row
    return DistanceMatrix(v, squared=squared)

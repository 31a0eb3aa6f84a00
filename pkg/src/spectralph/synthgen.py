"""Synthetic benchmark clouds: sample a manifold, embed it isometrically in a
high-dimensional ambient space, then corrupt it with Gaussian noise and
uniform box outliers.

All sampling is driven by a counter-based generator (Philox), so a cloud is a
pure function of its generation spec and seed; see :func:`mix_seed` for how
experiment cells derive independent streams from one user seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MANIFOLDS = ("circle", "linked_circles", "eyeglasses", "sphere", "torus")

# intrinsic coordinates produced by generate_manifold, per manifold
INTRINSIC_DIM = {
    "circle": 2,
    "eyeglasses": 2,
    "linked_circles": 3,
    "sphere": 3,
    "torus": 3,
}

# loops / voids each manifold actually has, used as benchmark ground truth
GROUND_TRUTH_FEATURES = {
    "circle": {1: 1},
    "linked_circles": {1: 2},
    "eyeglasses": {1: 1},
    "sphere": {1: 0, 2: 1},
    "torus": {1: 2, 2: 1},
}

TORUS_TUBE_RADIUS = 1.0
TORUS_CENTER_RADIUS = 2.0
EYEGLASSES_ARCLENGTH = np.pi + 2.4
EYEGLASSES_CENTER_GAP = 3.0
EYEGLASSES_BAR_LENGTH = 1.06
EYEGLASSES_BAR_GAP = 0.7

# strongest benchmark noise level; the outlier box is padded to contain the
# data even at this sigma
MAX_BENCH_SIGMA = 0.35


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """n points in ambient dimension d, immutable."""

    points: np.ndarray
    n: int = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-d, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"need at least one point and one dimension, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "n", pts.shape[0])
        object.__setattr__(self, "dim", pts.shape[1])


@dataclass(frozen=True)
class GenSpec:
    """One benchmark dataset: manifold, size, ambient dimension, corruption."""

    manifold: str
    n: int
    ambient_dim: int
    noise_sigma: float = 0.0
    outlier_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.manifold not in MANIFOLDS:
            raise ValueError(f"unknown manifold {self.manifold!r}, expected one of {MANIFOLDS}")
        if self.n < 4:
            raise ValueError(f"n must be at least 4, got {self.n}")
        if self.ambient_dim < INTRINSIC_DIM[self.manifold]:
            raise ValueError(
                f"ambient_dim {self.ambient_dim} below intrinsic dimension "
                f"{INTRINSIC_DIM[self.manifold]} of {self.manifold!r}"
            )
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.outlier_count < 0:
            raise ValueError(f"outlier_count must be >= 0, got {self.outlier_count}")


def rng_from(seed: int) -> np.random.Generator:
    """Counter-based generator; identical seed gives bit-identical streams."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))


def _splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def mix_seed(seed: int, *fields) -> int:
    """Fold strings/integers into a 64-bit cell seed.

    Each field is absorbed with splitmix64 (strings byte-wise), so cells that
    differ in any field get independent, reproducible streams.
    """
    h = _splitmix64(seed & 0xFFFFFFFFFFFFFFFF)
    for f in fields:
        if isinstance(f, str):
            for b in f.encode("utf8"):
                h = _splitmix64(h ^ b)
        else:
            h = _splitmix64(h ^ (int(f) & 0xFFFFFFFFFFFFFFFF))
    return h


# ---------------------------------------------------------------------------
# manifold samplers (intrinsic coordinates)
# ---------------------------------------------------------------------------


def _circle_points(n: int, radius: float = 1.0) -> np.ndarray:
    ang = 2.0 * np.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def _eyeglasses_points(n: int) -> np.ndarray:
    # two arcs with the gaps facing each other plus two bars bridging them;
    # 0.425n points per arc and 0.075n per bar, last part absorbs rounding
    n_arc = int(round(0.425 * n))
    n_bar = int(round(0.075 * n))
    counts = [n_arc, n_arc, n_bar, n - n_arc - n_arc - n_bar]
    if counts[-1] <= 0:
        raise ValueError(f"n={n} too small to split into eyeglasses parts")
    gap_half = (2 * np.pi - EYEGLASSES_ARCLENGTH) / 2  # half the angular gap
    cx = EYEGLASSES_CENTER_GAP / 2

    # left arc, gap facing +x: angles sweep from gap_half to 2*pi - gap_half
    t1 = np.linspace(gap_half, 2 * np.pi - gap_half, counts[0])
    left = np.column_stack([np.cos(t1) - cx, np.sin(t1)])
    # right arc is the mirror image
    t2 = np.linspace(np.pi + gap_half, 3 * np.pi - gap_half, counts[1])
    right = np.column_stack([np.cos(t2) + cx, np.sin(t2)])

    half_bar = EYEGLASSES_BAR_LENGTH / 2
    y_bar = EYEGLASSES_BAR_GAP / 2
    xs_top = np.linspace(-half_bar, half_bar, counts[2])
    xs_bot = np.linspace(-half_bar, half_bar, counts[3])
    top = np.column_stack([xs_top, np.full(counts[2], y_bar)])
    bottom = np.column_stack([xs_bot, np.full(counts[3], -y_bar)])
    return np.vstack([left, right, top, bottom])


def _linked_circles_points(n: int) -> np.ndarray:
    # each circle passes through the other's center, planes perpendicular
    na = n // 2
    nb = n - na
    ta = 2.0 * np.pi * np.arange(na) / na
    tb = 2.0 * np.pi * np.arange(nb) / nb
    a = np.column_stack([np.cos(ta), np.sin(ta), np.zeros(na)])
    b = np.column_stack([1.0 + np.cos(tb), np.zeros(nb), np.sin(tb)])
    return np.vstack([a, b])


def _sphere_points(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # resample the (measure-zero) degenerate draws
    while (norms < 1e-12).any():
        bad = norms[:, 0] < 1e-12
        v[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms


def _torus_points(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on the torus surface by rejection on the tube angle.

    The area element is proportional to R + r*cos(theta), so an angle drawn
    uniformly is accepted with probability (R + r*cos(theta)) / (R + r).
    """
    R, r = TORUS_CENTER_RADIUS, TORUS_TUBE_RADIUS
    theta = np.empty(n)
    filled = 0
    while filled < n:
        cand = rng.uniform(0.0, 2.0 * np.pi, size=2 * (n - filled))
        accept = rng.uniform(0.0, 1.0, size=cand.size) < (R + r * np.cos(cand)) / (R + r)
        good = cand[accept][: n - filled]
        theta[filled : filled + good.size] = good
        filled += good.size
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    ring = R + r * np.cos(theta)
    return np.column_stack([ring * np.cos(phi), ring * np.sin(phi), r * np.sin(theta)])


def generate_manifold(spec: GenSpec) -> PointCloud:
    """Sample the noise-free manifold in its intrinsic dimension (2 or 3)."""
    rng = rng_from(mix_seed(spec.seed, "manifold", spec.manifold))
    if spec.manifold == "circle":
        pts = _circle_points(spec.n)
    elif spec.manifold == "eyeglasses":
        pts = _eyeglasses_points(spec.n)
    elif spec.manifold == "linked_circles":
        pts = _linked_circles_points(spec.n)
    elif spec.manifold == "sphere":
        pts = _sphere_points(spec.n, rng)
    elif spec.manifold == "torus":
        pts = _torus_points(spec.n, rng)
    else:  # pragma: no cover - GenSpec already validates
        raise ValueError(f"unknown manifold {spec.manifold!r}")
    return PointCloud(pts)


# ---------------------------------------------------------------------------
# embedding and corruption
# ---------------------------------------------------------------------------


def embed_isometric(pc: PointCloud, target_dim: int, seed: int) -> PointCloud:
    """Map the cloud into ``target_dim`` dimensions with a random matrix with
    orthonormal columns; pairwise distances are preserved."""
    if target_dim < pc.dim:
        raise ValueError(f"target_dim {target_dim} < cloud dimension {pc.dim}")
    rng = rng_from(mix_seed(seed, "embed", target_dim))
    g = rng.normal(size=(target_dim, pc.dim))
    q, r = np.linalg.qr(g)
    # fix the gauge so the draw is deterministic across BLAS implementations
    q = q * np.sign(np.diagonal(r))[None, :]
    return PointCloud(pc.points @ q.T)


def add_gaussian_noise(pc: PointCloud, sigma: float, seed: int) -> PointCloud:
    """Add i.i.d. N(0, sigma^2) noise to every coordinate."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return pc
    rng = rng_from(mix_seed(seed, "noise"))
    return PointCloud(pc.points + sigma * rng.normal(size=pc.points.shape))


def outlier_box(pc: PointCloud, pad: float = 3.0 * MAX_BENCH_SIGMA) -> np.ndarray:
    """Axis-aligned box [min - pad, max + pad] per coordinate, shaped (2, d).

    With the default pad the box still contains the data after noise at the
    strongest benchmark level (3 sigma_max per side).
    """
    lo = pc.points.min(axis=0) - pad
    hi = pc.points.max(axis=0) + pad
    return np.vstack([lo, hi])


def add_outliers(
    pc: PointCloud, count: int, seed: int, box: np.ndarray | None = None
) -> PointCloud:
    """Append ``count`` points drawn uniformly from ``box`` (default: the
    padded bounding box of ``pc``). The original points are untouched."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count == 0:
        return pc
    if box is None:
        box = outlier_box(pc)
    box = np.asarray(box, dtype=np.float64)
    if box.shape != (2, pc.dim):
        raise ValueError(f"box must have shape (2, {pc.dim}), got {box.shape}")
    rng = rng_from(mix_seed(seed, "outliers", count))
    extra = rng.uniform(box[0], box[1], size=(count, pc.dim))
    return PointCloud(np.vstack([pc.points, extra]))


def generate_dataset(spec: GenSpec) -> PointCloud:
    """Full pipeline: manifold -> isometric embedding -> noise -> outliers.

    The outlier box is computed on the noise-free embedded cloud so that it
    does not wander with the noise draw.
    """
    clean = embed_isometric(generate_manifold(spec), spec.ambient_dim, spec.seed)
    noised = add_gaussian_noise(clean, spec.noise_sigma, spec.seed)
    if spec.outlier_count:
        return add_outliers(noised, spec.outlier_count, spec.seed, box=outlier_box(clean))
    return noised


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


def load_csv(path) -> PointCloud:
    """Read a rectangular numeric CSV (rows = points). Lines starting with
    ``#`` are comments; a single non-numeric first row is taken as a header."""
    rows = []
    header_skipped = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if rows or header_skipped:
                    raise ValueError(f"{path}:{lineno}: non-numeric cell outside header")
                header_skipped = True
                continue
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise ValueError(
                    f"{path}:{lineno}: ragged row with {len(rows[-1])} cells, "
                    f"expected {len(rows[0])}"
                )
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return PointCloud(np.array(rows, dtype=np.float64))


def write_csv(path, pc: PointCloud) -> None:
    with open(path, "w") as fh:
        fh.write("# spectralph pointcloud v1\n")
        for row in pc.points:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")

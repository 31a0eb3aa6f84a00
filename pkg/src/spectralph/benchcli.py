"""Config-driven benchmark sweeps and the ``spectralph`` command line.

A sweep cell is (dataset, sigma, ambient dim, distance, seed): generate the
cloud, build the distance, cap infinities, run persistence, and score each
homology dimension that has a declared ground truth. Cells are independent
and may run in a process pool; rows are sorted by a fixed key before writing
so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import basedist, scoring, spectral, synthgen
from .dmatrix import DistanceMatrix, read_distance_csv, write_distance_csv
from .knngraph import NeighborGraph, exact_knn, symmetric_knn_graph
from .ripscomplex import (
    PersistenceDiagram,
    brute_force_betti,
    read_diagram_csv,
    representative_cycle,
    rips_persistence,
    write_diagram_csv,
)
from .synthgen import GenSpec, PointCloud, load_csv, mix_seed, write_csv

DEFAULT_SIGMA_GRID = [round(s, 6) for s in np.linspace(0.0, 0.35, 29)]

RESULT_COLUMNS = (
    "dataset,distance,params,sigma,ambient_dim,dim,m,seed,s_m,thresholded,widest_gap,status"
)


class UsageError(Exception):
    """Bad command line or config; exits with code 1."""


# ---------------------------------------------------------------------------
# distance registry
# ---------------------------------------------------------------------------


def _graph_for(base: DistanceMatrix, k: int, weighted: bool = False) -> NeighborGraph:
    nb = exact_knn(base, k)
    return symmetric_knn_graph(nb, weights=base if weighted else None)


def _build_euclidean(pc, base, p):
    return base


def _build_correlation(pc, base, p):
    return basedist.correlation_distance(pc)


def _build_fermat(pc, base, p):
    return basedist.fermat(base, p["p"], k=p.get("k"))


def _build_dtm(pc, base, p):
    return basedist.dtm(base, p["k"], p.get("p", 2.0), p.get("xi", 1.0))


def _build_core(pc, base, p):
    return basedist.core_distance(base, p["k"])


def _build_geodesic(pc, base, p):
    return basedist.geodesic(base, p["k"])


def _build_tsne(pc, base, p):
    return basedist.tsne_graph_distance(base, p["perplexity"])


def _build_umap(pc, base, p):
    return basedist.umap_graph_distance(base, p["k"])


def _build_eff_res(pc, base, p):
    g = _graph_for(base, p["k"], p.get("weighted", False))
    if p.get("corrected", True):
        return spectral.effective_resistance_corrected(
            g, route=p.get("route", "correction_formula"), sqrt=p.get("sqrt", False)
        )
    return spectral.effective_resistance_naive(g, route=p.get("route", "pseudoinverse"))


def _build_diffusion(pc, base, p):
    g = _graph_for(base, p["k"])
    return spectral.diffusion_distance(g, p["t"], route=p.get("route", "transition_matrix"))


def _build_laplacian_eigenmaps(pc, base, p):
    g = _graph_for(base, p["k"])
    return spectral.laplacian_eigenmaps_distance(spectral.eigendecompose(g), p["dim"])


def _build_dpt(pc, base, p):
    g = _graph_for(base, p["k"])
    return spectral.dpt_distance(spectral.eigendecompose(g), p.get("variant", "symd"))


def _build_potential(pc, base, p):
    g = _graph_for(base, p["k"])
    return spectral.potential_distance(g, p["t"])


# name -> (builder, required params, optional params)
DISTANCES = {
    "euclidean": (_build_euclidean, (), ()),
    "correlation": (_build_correlation, (), ()),
    "fermat": (_build_fermat, ("p",), ("k",)),
    "dtm": (_build_dtm, ("k",), ("p", "xi")),
    "core": (_build_core, ("k",), ()),
    "geodesic": (_build_geodesic, ("k",), ()),
    "tsne_graph": (_build_tsne, ("perplexity",), ()),
    "umap_graph": (_build_umap, ("k",), ()),
    "effective_resistance": (
        _build_eff_res,
        ("k",),
        ("corrected", "weighted", "sqrt", "route"),
    ),
    "diffusion": (_build_diffusion, ("k", "t"), ("route",)),
    "laplacian_eigenmaps": (_build_laplacian_eigenmaps, ("k", "dim"), ()),
    "dpt": (_build_dpt, ("k",), ("variant",)),
    "potential": (_build_potential, ("k", "t"), ()),
}


def build_distance(name: str, params: dict, pc: PointCloud, base: DistanceMatrix) -> DistanceMatrix:
    if name not in DISTANCES:
        raise UsageError(f"unknown distance {name!r}; known: {sorted(DISTANCES)}")
    builder, required, optional = DISTANCES[name]
    missing = [r for r in required if r not in params]
    if missing:
        raise UsageError(f"distance {name!r} missing required params {missing}")
    unknown = [q for q in params if q not in required + optional]
    if unknown:
        raise UsageError(f"distance {name!r} got unknown params {unknown}")
    return builder(pc, base, params)


def _params_label(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":")) if params else "{}"


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    manifold: str
    n: int
    m_truth: dict  # homology dim -> ground-truth feature count
    base_distance: str = "euclidean"
    outlier_count: int = 0


@dataclass(frozen=True)
class DistanceSpec:
    name: str
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return _params_label(self.params)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    sigma_grid: tuple
    dim_grid: tuple
    distances: tuple
    seeds: tuple
    max_dim: int = 1
    use_threshold: bool = True
    threshold_ratio: float = scoring.DEATH_BIRTH_RATIO
    output_dir: str = "results"

    def scored_dims(self, dataset: DatasetSpec) -> list[int]:
        return sorted(d for d in dataset.m_truth if d <= self.max_dim)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        max_dim = int(raw.get("max_dim", 1))
        datasets = []
        for entry in raw["datasets"]:
            if "m_truth" in entry:
                m_truth = {int(k): int(v) for k, v in entry["m_truth"].items()}
            else:
                # known manifolds carry their feature counts
                m_truth = dict(synthgen.GROUND_TRUTH_FEATURES[entry["manifold"]])
            ds = DatasetSpec(
                name=entry.get("name", entry["manifold"]),
                manifold=entry["manifold"],
                n=int(entry["n"]),
                m_truth=m_truth,
                base_distance=entry.get("base_distance", "euclidean"),
                outlier_count=int(entry.get("outlier_count", 0)),
            )
            datasets.append(ds)
        distances = []
        for entry in raw["distances"]:
            name = entry["name"]
            if name not in DISTANCES:
                raise UsageError(f"unknown distance {name!r} in config")
            params = dict(entry.get("params", {}))
            params = {k: (math.inf if v == "inf" else v) for k, v in params.items()}
            distances.append(DistanceSpec(name, params))
        cfg = ExperimentConfig(
            datasets=tuple(datasets),
            sigma_grid=tuple(raw.get("sigma_grid", DEFAULT_SIGMA_GRID)),
            dim_grid=tuple(raw.get("dim_grid", [50])),
            distances=tuple(distances),
            seeds=tuple(raw.get("seeds", [0, 1, 2])),
            max_dim=max_dim,
            use_threshold=bool(raw.get("apply_threshold", True)),
            threshold_ratio=float(raw.get("threshold_ratio", scoring.DEATH_BIRTH_RATIO)),
            output_dir=raw.get("output_dir", "results"),
        )
    except KeyError as exc:
        raise UsageError(f"config missing required field {exc}") from exc
    for ds in cfg.datasets:
        if ds.base_distance not in ("euclidean", "correlation"):
            raise UsageError(f"dataset {ds.name!r}: unknown base_distance {ds.base_distance!r}")
        if not cfg.scored_dims(ds):
            raise UsageError(f"dataset {ds.name!r} has no m_truth entry for dims <= {cfg.max_dim}")
    return cfg


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------


def run_cell(
    dataset: DatasetSpec,
    sigma: float,
    ambient_dim: int,
    distance: DistanceSpec,
    seed: int,
    sigma_index: int = 0,
    dim_index: int = 0,
    max_dim: int = 1,
    use_threshold: bool = True,
    threshold_ratio: float = scoring.DEATH_BIRTH_RATIO,
    artifacts_dir=None,
) -> tuple[PersistenceDiagram, list[scoring.ScoreReport]]:
    """One benchmark cell: generate, embed, noise, distance, persist, score.

    All distances in the same cell see the same cloud: the data seed mixes
    the user seed with the dataset name and the grid indices, never with the
    distance. With ``artifacts_dir`` set, the cloud, the distance matrix, and
    the diagram are written there for inspection.
    """
    cell_seed = mix_seed(seed, dataset.name, sigma_index, dim_index)
    spec = GenSpec(
        manifold=dataset.manifold,
        n=dataset.n,
        ambient_dim=ambient_dim,
        noise_sigma=sigma,
        outlier_count=dataset.outlier_count,
        seed=cell_seed,
    )
    pc = synthgen.generate_dataset(spec)
    if dataset.base_distance == "correlation":
        base = basedist.correlation_distance(pc)
    else:
        base = basedist.euclidean(pc)
    dist = build_distance(distance.name, distance.params, pc, base)
    dist = basedist.finitize(dist)
    scored = sorted(d for d in dataset.m_truth if d <= max_dim)
    diagram = rips_persistence(dist, max_dim=max(scored))
    reports = []
    for dim in scored:
        m = max(1, int(dataset.m_truth[dim]))  # m_truth 0 is a negative control, scored at m=1
        reports.append(
            scoring.score_diagram(diagram, dim, m, use_threshold, threshold_ratio)
        )
    if artifacts_dir is not None:
        out = Path(artifacts_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = f"{dataset.name}_{distance.name}_s{sigma}_d{ambient_dim}_seed{seed}"
        write_csv(out / f"{tag}.cloud.csv", pc)
        write_distance_csv(out / f"{tag}.dist.csv", dist)
        write_diagram_csv(out / f"{tag}.diagram.csv", diagram)
    return diagram, reports


def _cell_rows(args) -> list[dict]:
    cfg, dataset, si, sigma, di, ambient_dim, dist_spec, seed = args
    common = {
        "dataset": dataset.name,
        "distance": dist_spec.name,
        "params": dist_spec.label,
        "sigma": repr(float(sigma)),
        "ambient_dim": str(ambient_dim),
        "seed": str(seed),
    }
    rows = []
    try:
        _, reports = run_cell(
            dataset,
            sigma,
            ambient_dim,
            dist_spec,
            seed,
            sigma_index=si,
            dim_index=di,
            max_dim=cfg.max_dim,
            use_threshold=cfg.use_threshold,
            threshold_ratio=cfg.threshold_ratio,
        )
        for rep in reports:
            rows.append(
                common
                | {
                    "dim": str(rep.dim),
                    "m": str(rep.m),
                    "s_m": repr(rep.s_m),
                    "thresholded": "1" if rep.thresholded else "0",
                    "widest_gap": str(rep.widest_gap_correct),
                    "status": "ok",
                }
            )
    except Exception as exc:  # crash isolation: a failing cell is one row
        for dim in cfg.scored_dims(dataset):
            rows.append(
                common
                | {
                    "dim": str(dim),
                    "m": str(max(1, int(dataset.m_truth[dim]))),
                    "s_m": "",
                    "thresholded": "",
                    "widest_gap": "",
                    "status": f"error: {type(exc).__name__}: {exc}",
                }
            )
    return rows


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> tuple[Path, Path]:
    """Run every cell, write results.csv and summary.json, return their paths.

    SPECTRALPH_MAX_THREADS caps the worker count regardless of ``threads``.
    """
    cap = os.environ.get("SPECTRALPH_MAX_THREADS")
    if cap is not None:
        threads = max(1, min(threads, int(cap)))
    cells = []
    for dataset in cfg.datasets:
        for si, sigma in enumerate(cfg.sigma_grid):
            for di, ambient_dim in enumerate(cfg.dim_grid):
                for dist_spec in cfg.distances:
                    for seed in cfg.seeds:
                        cells.append(
                            (cfg, dataset, si, sigma, di, ambient_dim, dist_spec, seed)
                        )
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_cell_rows, cells))
    else:
        chunks = [_cell_rows(c) for c in cells]
    rows = [row for chunk in chunks for row in chunk]
    sort_key = lambda r: (
        r["dataset"],
        r["distance"],
        r["params"],
        float(r["sigma"]),
        int(r["ambient_dim"]),
        int(r["dim"]),
        int(r["seed"]),
    )
    rows.sort(key=sort_key)

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "results.csv"
    with open(csv_path, "w") as fh:
        fh.write("# spectralph results v1\n")
        fh.write(RESULT_COLUMNS + "\n")
        cols = RESULT_COLUMNS.split(",")
        for r in rows:
            fh.write(",".join(r[c].replace(",", ";") for c in cols) + "\n")

    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        key = (r["dataset"], r["distance"], r["params"], r["sigma"], r["ambient_dim"], r["dim"])
        groups.setdefault(key, []).append(r)
    summary = []
    for key in sorted(groups):
        vals = np.array([float(r["s_m"]) for r in groups[key]])
        gaps = np.array([float(r["widest_gap"]) for r in groups[key]])
        summary.append(
            {
                "dataset": key[0],
                "distance": key[1],
                "params": json.loads(key[2]),
                "sigma": float(key[3]),
                "ambient_dim": int(key[4]),
                "dim": int(key[5]),
                "n_cells": int(vals.size),
                "mean_s_m": float(vals.mean()),
                "sd_s_m": float(vals.std()),
                "mean_widest_gap": float(gaps.mean()),
            }
        )
    json_path = outdir / "summary.json"
    with open(json_path, "w") as fh:
        json.dump({"format": "spectralph summary v1", "groups": summary}, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_param(text: str):
    try:
        key, value = text.split("=", 1)
    except ValueError:
        raise UsageError(f"--param expects key=value, got {text!r}") from None
    if value == "inf":
        return key, math.inf
    for cast in (int, float):
        try:
            return key, cast(value)
        except ValueError:
            pass
    if value in ("true", "false"):
        return key, value == "true"
    return key, value


def _build_parser() -> _Parser:
    parser = _Parser(prog="spectralph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic cloud as CSV")
    g.add_argument("--manifold", required=True, choices=sorted(synthgen.MANIFOLDS))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--ambient-dim", type=int, required=True)
    g.add_argument("--sigma", type=float, default=0.0)
    g.add_argument("--outliers", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)

    d = sub.add_parser("distance", help="compute a distance matrix from a cloud CSV")
    d.add_argument("--input", required=True)
    d.add_argument("--name", required=True, choices=sorted(DISTANCES))
    d.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    d.add_argument("--base", choices=["euclidean", "correlation"], default="euclidean")
    d.add_argument("--finitize", action="store_true", help="replace inf entries before writing")
    d.add_argument("--output", required=True)

    p = sub.add_parser("ph", help="persistence diagram of a distance CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--max-dim", type=int, default=1, choices=[1, 2])
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--include-h0", action="store_true")
    p.add_argument("--output", default=None, help="diagram CSV (default: stdout)")
    p.add_argument("--cycles", default=None, help="write dim-1 representative cycles here")

    s = sub.add_parser("score", help="score a diagram CSV")
    s.add_argument("--diagram", required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--no-threshold", action="store_true")

    o = sub.add_parser("oracle", help="brute-force Betti numbers at one scale")
    o.add_argument("--input", required=True)
    o.add_argument("--tau", type=float, required=True)
    o.add_argument("--max-dim", type=int, default=2, choices=[1, 2])

    b = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    b.add_argument("--config", required=True)
    b.add_argument("--output", default=None, help="override the config output_dir")
    b.add_argument("--seed", type=int, default=None, help="replace the config seed list")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--no-threshold", action="store_true")

    e = sub.add_parser("graph", help="dump the symmetric kNN edge list as i,j,weight CSV")
    e.add_argument("--input", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--weighted", action="store_true", help="weight edges by inverse distance")
    e.add_argument("--output", required=True)
    return parser


def _load_cloud(path) -> PointCloud:
    try:
        return load_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _cmd_generate(args) -> int:
    spec = GenSpec(
        manifold=args.manifold,
        n=args.n,
        ambient_dim=args.ambient_dim,
        noise_sigma=args.sigma,
        outlier_count=args.outliers,
        seed=args.seed,
    )
    write_csv(args.output, synthgen.generate_dataset(spec))
    return 0


def _cmd_distance(args) -> int:
    pc = _load_cloud(args.input)
    base = (
        basedist.correlation_distance(pc)
        if args.base == "correlation"
        else basedist.euclidean(pc)
    )
    params = dict(_parse_param(p) for p in args.param)
    dist = build_distance(args.name, params, pc, base)
    if args.finitize:
        dist = basedist.finitize(dist)
    write_distance_csv(args.output, dist)
    return 0


def _cmd_ph(args) -> int:
    try:
        dist = read_distance_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    diagram = rips_persistence(
        dist, max_dim=args.max_dim, threshold=args.threshold, include_h0=args.include_h0
    )
    if args.output:
        write_diagram_csv(args.output, diagram)
    else:
        sys.stdout.write("dim,birth,death\n")
        for f in diagram.features:
            sys.stdout.write(f"{f.dim},{f.birth!r},{f.death!r}\n")
    if args.cycles:
        with open(args.cycles, "w") as fh:
            fh.write("# spectralph cycles v1\n")
            fh.write("feature_id,u,v\n")
            for idx, f in enumerate(diagram.features):
                if f.dim != 1 or f.birth_simplex is None:
                    continue
                cyc = representative_cycle(dist, f)
                for u, v in cyc.edges:
                    fh.write(f"{idx},{u},{v}\n")
    return 0


def _cmd_score(args) -> int:
    try:
        diagram = read_diagram_csv(args.diagram)
    except OSError as exc:
        raise UsageError(f"cannot read {args.diagram}: {exc}") from exc
    report = scoring.score_diagram(
        diagram, args.dim, args.m, use_threshold=not args.no_threshold
    )
    sys.stdout.write(
        f"s_{report.m}={report.s_m!r} thresholded={int(report.thresholded)} "
        f"widest_gap={report.widest_gap_correct}\n"
    )
    return 0


def _cmd_oracle(args) -> int:
    try:
        dist = read_distance_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    betti = brute_force_betti(dist, args.tau, max_dim=args.max_dim)
    sys.stdout.write(" ".join(f"b{i}={b}" for i, b in enumerate(betti)) + "\n")
    return 0


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    if args.output is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "output_dir": args.output})
    if args.seed is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "seeds": (args.seed,)})
    if args.no_threshold:
        cfg = ExperimentConfig(**{**cfg.__dict__, "use_threshold": False})
    csv_path, json_path = run_sweep(cfg, threads=args.threads)
    sys.stdout.write(f"wrote {csv_path} and {json_path}\n")
    return 0


def _cmd_graph(args) -> int:
    pc = _load_cloud(args.input)
    base = basedist.euclidean(pc)
    g = symmetric_knn_graph(exact_knn(base, args.k), weights=base if args.weighted else None)
    with open(args.output, "w") as fh:
        fh.write("# spectralph edges v1\n")
        fh.write("i,j,weight\n")
        for i, j, w in g.edge_list():
            fh.write(f"{int(i)},{int(j)},{float(w)!r}\n")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "distance": _cmd_distance,
    "ph": _cmd_ph,
    "score": _cmd_score,
    "oracle": _cmd_oracle,
    "bench": _cmd_bench,
    "graph": _cmd_graph,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except Exception as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

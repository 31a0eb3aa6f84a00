import json

import numpy as np
import pytest

from spectralph import (
    DistanceMatrix,
    read_diagram_csv,
    read_distance_csv,
    write_distance_csv,
)
from spectralph.benchcli import (
    DatasetSpec,
    DistanceSpec,
    UsageError,
    build_distance,
    main,
    parse_config,
    run_cell,
    run_sweep,
)
from spectralph.dmatrix import pairwise_sq_euclidean
from spectralph.synthgen import PointCloud


def _square_csv(path):
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    dist = DistanceMatrix(np.sqrt(pairwise_sq_euclidean(pts)))
    write_distance_csv(path, dist)
    return dist


def _tiny_config(tmp_path, **overrides):
    raw = {
        "datasets": [
            {"manifold": "circle", "n": 24, "m_truth": {"1": 1}},
            {"manifold": "eyeglasses", "name": "glasses", "n": 40, "m_truth": {"1": 1}},
        ],
        "sigma_grid": [0.0, 0.05, 0.1],
        "dim_grid": [3],
        "distances": [{"name": "euclidean"}],
        "seeds": [0, 1, 2],
        "max_dim": 1,
        "output_dir": str(tmp_path / "out"),
    }
    raw.update(overrides)
    return parse_config(raw)


# ---------------------------------------------------------------------------
# distance matrix CSV
# ---------------------------------------------------------------------------


def test_distance_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(12, 3))
    dist = DistanceMatrix(np.sqrt(pairwise_sq_euclidean(pts)), squared=False)
    path = tmp_path / "d.csv"
    write_distance_csv(path, dist)
    back = read_distance_csv(path)
    assert back.n == 12 and back.squared == dist.squared
    assert np.array_equal(back.values, dist.values)

    sq = DistanceMatrix(dist.values**2, squared=True)
    write_distance_csv(path, sq)
    assert read_distance_csv(path).squared is True


def test_distance_csv_header_visible(tmp_path):
    path = tmp_path / "d.csv"
    _square_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "n=4 squared=0"


# ---------------------------------------------------------------------------
# registry and config
# ---------------------------------------------------------------------------


def test_build_distance_validates_params():
    rng = np.random.default_rng(1)
    pc = PointCloud(rng.normal(size=(20, 3)))
    from spectralph.basedist import euclidean

    base = euclidean(pc)
    with pytest.raises(UsageError, match="unknown distance"):
        build_distance("warp", {}, pc, base)
    with pytest.raises(UsageError, match="missing required"):
        build_distance("diffusion", {"k": 3}, pc, base)
    with pytest.raises(UsageError, match="unknown params"):
        build_distance("euclidean", {"k": 3}, pc, base)
    out = build_distance("diffusion", {"k": 3, "t": 2}, pc, base)
    assert out.n == 20
    weighted = build_distance(
        "effective_resistance", {"k": 3, "weighted": True, "sqrt": True}, pc, base
    )
    assert weighted.n == 20 and not weighted.squared


def test_parse_config_defaults_m_truth_for_known_manifolds():
    cfg = parse_config(
        {
            "datasets": [{"manifold": "torus", "n": 50}],
            "distances": [{"name": "euclidean"}],
            "max_dim": 2,
        }
    )
    assert cfg.datasets[0].m_truth == {1: 2, 2: 1}


def test_parse_config_validation():
    with pytest.raises(UsageError, match="missing required"):
        parse_config({"datasets": [{"manifold": "circle", "n": 10, "m_truth": {"1": 1}}]})
    with pytest.raises(UsageError, match="unknown distance"):
        parse_config(
            {
                "datasets": [{"manifold": "circle", "n": 10, "m_truth": {"1": 1}}],
                "distances": [{"name": "bogus"}],
            }
        )
    with pytest.raises(UsageError, match="no m_truth"):
        parse_config(
            {
                "datasets": [{"manifold": "sphere", "n": 10, "m_truth": {"2": 1}}],
                "distances": [{"name": "euclidean"}],
                "max_dim": 1,
            }
        )


def test_run_cell_clean_circle_scores_high():
    ds = DatasetSpec("circle", "circle", 32, {1: 1})
    diagram, reports = run_cell(ds, 0.0, 3, DistanceSpec("euclidean"), seed=0)
    assert len(reports) == 1
    assert reports[0].dim == 1 and reports[0].m == 1
    assert reports[0].s_m > 0.9
    assert diagram.in_dim(1)


def test_run_cell_persists_artifacts(tmp_path):
    ds = DatasetSpec("circle", "circle", 24, {1: 1})
    run_cell(ds, 0.0, 3, DistanceSpec("euclidean"), seed=0, artifacts_dir=tmp_path / "a")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert [".".join(n.rsplit(".", 2)[-2:]) for n in names] == [
        "cloud.csv",
        "diagram.csv",
        "dist.csv",
    ]


def test_run_cell_same_cloud_across_distances():
    ds = DatasetSpec("circle", "circle", 24, {1: 1})
    d1, _ = run_cell(ds, 0.05, 3, DistanceSpec("euclidean"), seed=1)
    d2, _ = run_cell(ds, 0.05, 3, DistanceSpec("core", {"k": 3}), seed=1)
    # same generated cloud: births of the euclidean diagram bound core births
    assert d1.threshold <= d2.threshold + 1e-9


def test_run_cell_linked_circles_finds_both_loops():
    ds = DatasetSpec("linked_circles", "linked_circles", 300, {1: 2})
    spec = DistanceSpec("effective_resistance", {"k": 30})
    _, reports = run_cell(ds, 0.0, 50, spec, seed=0)
    assert reports[0].m == 2
    assert reports[0].s_m >= 0.9
    assert reports[0].widest_gap_correct == 1


def test_run_cell_eyeglasses_single_loop():
    ds = DatasetSpec("eyeglasses", "eyeglasses", 300, {1: 1})
    spec = DistanceSpec("effective_resistance", {"k": 30})
    _, reports = run_cell(ds, 0.0, 50, spec, seed=0)
    assert reports[0].s_m >= 0.9


def test_run_sweep_row_count_and_determinism(tmp_path):
    cfg = _tiny_config(tmp_path)
    csv_path, json_path = run_sweep(cfg)
    body = csv_path.read_text()
    rows = [ln for ln in body.splitlines() if ln and not ln.startswith("#")][1:]
    assert len(rows) == 2 * 3 * 1 * 3  # datasets x sigma x distance x seeds

    csv_path2, _ = run_sweep(cfg)
    assert csv_path2.read_text() == body

    summary = json.loads(json_path.read_text())
    groups = summary["groups"]
    assert len(groups) == 2 * 3
    # mean matches hand average of the raw rows
    first = groups[0]
    matching = [
        float(r.split(",")[8])
        for r in rows
        if r.startswith(f"{first['dataset']},{first['distance']}")
        and f",{first['sigma']!r}," in r or False
    ]
    by_key = {}
    for r in rows:
        parts = r.split(",")
        key = (parts[0], parts[1], parts[2], parts[3], parts[4], parts[5])
        by_key.setdefault(key, []).append(float(parts[8]))
    for g in groups:
        key = (
            g["dataset"],
            g["distance"],
            json.dumps(g["params"], sort_keys=True, separators=(",", ":")),
            repr(g["sigma"]),
            str(g["ambient_dim"]),
            str(g["dim"]),
        )
        vals = by_key[key]
        assert g["mean_s_m"] == pytest.approx(sum(vals) / len(vals), abs=1e-12)
        assert g["n_cells"] == len(vals)


def test_run_sweep_parallel_equals_serial(tmp_path):
    cfg = _tiny_config(tmp_path, sigma_grid=[0.0], datasets=[
        {"manifold": "circle", "n": 20, "m_truth": {"1": 1}},
    ])
    path_serial, _ = run_sweep(cfg, threads=1)
    serial = path_serial.read_text()
    path_par, _ = run_sweep(cfg, threads=2)
    assert path_par.read_text() == serial


def test_run_sweep_isolates_failing_cells(tmp_path):
    cfg = _tiny_config(
        tmp_path,
        datasets=[{"manifold": "circle", "n": 24, "m_truth": {"1": 1}}],
        sigma_grid=[0.0],
        # k = n-1 is legal; k = 100 > n-1 must fail per cell, not abort
        distances=[{"name": "euclidean"}, {"name": "geodesic", "params": {"k": 100}}],
    )
    csv_path, _ = run_sweep(cfg)
    rows = [ln for ln in csv_path.read_text().splitlines() if ln and not ln.startswith("#")][1:]
    ok = [r for r in rows if r.endswith(",ok")]
    bad = [r for r in rows if ",error:" in r]
    assert len(ok) == 3 and len(bad) == 3


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_generate_distance_ph_score_roundtrip(tmp_path, capsys):
    cloud = tmp_path / "cloud.csv"
    rc = main(
        [
            "generate", "--manifold", "circle", "--n", "30", "--ambient-dim", "5",
            "--sigma", "0.02", "--seed", "3", "--output", str(cloud),
        ]
    )
    assert rc == 0
    dist = tmp_path / "dist.csv"
    rc = main(["distance", "--input", str(cloud), "--name", "euclidean", "--output", str(dist)])
    assert rc == 0
    diagram = tmp_path / "diag.csv"
    rc = main(["ph", "--input", str(dist), "--max-dim", "1", "--output", str(diagram)])
    assert rc == 0
    diag = read_diagram_csv(diagram)
    assert diag.in_dim(1)
    rc = main(["score", "--diagram", str(diagram), "--dim", "1", "--m", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "s_1=" in out


def test_cli_ph_square_prints_expected_feature(tmp_path, capsys):
    dist = tmp_path / "square.csv"
    _square_csv(dist)
    rc = main(["ph", "--input", str(dist), "--max-dim", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1,1.0,1.41421356" in out


def test_cli_ph_writes_cycles(tmp_path):
    dist = tmp_path / "square.csv"
    _square_csv(dist)
    cyc = tmp_path / "cycles.csv"
    diagram = tmp_path / "diag.csv"
    rc = main(["ph", "--input", str(dist), "--output", str(diagram), "--cycles", str(cyc)])
    assert rc == 0
    rows = [ln for ln in cyc.read_text().splitlines() if ln and not ln.startswith("#")][1:]
    assert len(rows) == 4  # the square's four sides


def test_cli_oracle(tmp_path, capsys):
    dist = tmp_path / "square.csv"
    _square_csv(dist)
    rc = main(["oracle", "--input", str(dist), "--tau", "1.2", "--max-dim", "2"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "b0=1 b1=1 b2=0"


def test_cli_graph_dump(tmp_path):
    cloud = tmp_path / "cloud.csv"
    main(["generate", "--manifold", "circle", "--n", "12", "--ambient-dim", "2",
          "--output", str(cloud)])
    edges = tmp_path / "edges.csv"
    rc = main(["graph", "--input", str(cloud), "--k", "2", "--output", str(edges)])
    assert rc == 0
    rows = [ln for ln in edges.read_text().splitlines() if ln and not ln.startswith("#")][1:]
    assert len(rows) == 12  # k=2 on an equidistant ring gives exactly the ring
    assert all(row.endswith(",1.0") or "," in row for row in rows)
    ring = sorted(tuple(map(int, r.split(",")[:2])) for r in rows)
    assert ring == sorted((i, (i + 1) % 12) if i < (i + 1) % 12 else ((i + 1) % 12, i) for i in range(12))


def test_cli_bench_and_exit_codes(tmp_path, capsys):
    cfg = {
        "datasets": [{"manifold": "circle", "n": 20, "m_truth": {"1": 1}}],
        "sigma_grid": [0.0],
        "dim_grid": [2],
        "distances": [{"name": "euclidean"}],
        "seeds": [0],
        "output_dir": str(tmp_path / "res"),
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["bench", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "res" / "results.csv").exists()
    capsys.readouterr()

    assert main(["bench", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["ph", "--input", str(tmp_path / "nothere.csv")]) == 1
    capsys.readouterr()


def test_cli_runtime_failure_exit_code(tmp_path, capsys):
    # oracle on too many points: a runtime failure, not a usage error
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(12, 2))
    dist = DistanceMatrix(np.sqrt(pairwise_sq_euclidean(pts)))
    path = tmp_path / "big.csv"
    write_distance_csv(path, dist)
    rc = main(["oracle", "--input", str(path), "--tau", "1.0"])
    assert rc == 2
    capsys.readouterr()


def test_cli_no_threshold_flag(tmp_path, capsys):
    diagram = tmp_path / "diag.csv"
    diagram.write_text("dim,birth,death\n1,1.0,1.1\n")
    assert main(["score", "--diagram", str(diagram), "--dim", "1", "--m", "1"]) == 0
    gated = capsys.readouterr().out
    assert "s_1=0.0" in gated and "thresholded=1" in gated
    assert main(["score", "--diagram", str(diagram), "--dim", "1", "--m", "1", "--no-threshold"]) == 0
    free = capsys.readouterr().out
    assert "thresholded=0" in free

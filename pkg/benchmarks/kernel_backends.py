"""Time the compiled kernels against the pure-Python fallback.

The package selects its backend from SPECTRALPH_BACKEND at import time, so
this script re-executes itself once per backend in a subprocess and prints a
small table. Run from the repository root:

    python benchmarks/kernel_backends.py
"""

import json
import os
import subprocess
import sys
import time

WORKLOADS = ("rips_h1", "rips_h2", "geodesic")


def run_workloads() -> dict:
    from spectralph import GenSpec, euclidean, generate_dataset, geodesic, rips_persistence
    from spectralph._accel import backend_name

    sizes = {"rips_h1": 120, "rips_h2": 40, "geodesic": 150}
    pc = generate_dataset(GenSpec("circle", sizes["rips_h1"], 10, 0.1, seed=1))
    base = euclidean(pc)
    small = generate_dataset(GenSpec("sphere", sizes["rips_h2"], 5, 0.05, seed=2))
    small_base = euclidean(small)
    geo_pc = generate_dataset(GenSpec("circle", sizes["geodesic"], 8, 0.05, seed=3))

    # warm-up so JIT compilation stays out of the timings
    rips_persistence(base, max_dim=1)
    rips_persistence(small_base, max_dim=2)
    geodesic(geo_pc, 8)

    results = {"backend": backend_name(), "sizes": sizes}
    t0 = time.perf_counter()
    rips_persistence(base, max_dim=1)
    results["rips_h1"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    rips_persistence(small_base, max_dim=2)
    results["rips_h2"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    geodesic(geo_pc, 8)
    results["geodesic"] = time.perf_counter() - t0
    return results


def main() -> int:
    if os.environ.get("_KERNEL_BENCH_CHILD"):
        print(json.dumps(run_workloads()))
        return 0

    rows = []
    for backend in ("numba", "python"):
        env = dict(os.environ, SPECTRALPH_BACKEND=backend, _KERNEL_BENCH_CHILD="1")
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    sizes = rows[0]["sizes"]
    print(f"{'workload':<12}{'n':>6}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name in WORKLOADS:
        a, b = rows[0][name], rows[1][name]
        print(f"{name:<12}{sizes[name]:>6}{a:>12.4f}{b:>12.4f}{b / a:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

import numpy as np
import pytest

import spectralph


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so per-test timings reflect steady state."""
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    d = np.sqrt(spectralph.dmatrix.pairwise_sq_euclidean(pts))
    spectralph.rips_persistence(d, max_dim=2, include_h0=True)
    spectralph.geodesic(spectralph.PointCloud(pts), 2)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    reports = []
    for key in ("passed", "failed"):
        reports.extend(terminalreporter.stats.get(key, []))
    acceptance = [
        r
        for r in reports
        if getattr(r, "when", None) == "call" and "test_acceptance" in r.nodeid
    ]
    if not acceptance:
        return
    acceptance.sort(key=lambda r: r.nodeid)
    terminalreporter.write_sep("=", "acceptance criteria")
    for r in acceptance:
        name = r.nodeid.split("::")[-1]
        status = "PASS" if r.passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({r.duration:.1f}s)")

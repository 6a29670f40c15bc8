import numpy as np
import pytest

from cutrom.geometry import LevelSetDomain, classify, ellipse_levelset
from cutrom.mesh import build_structured_mesh

# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")


@pytest.fixture(scope="session")
def darcy_mesh():
    return build_structured_mesh((-1.2, 1.2, -1.2, 1.2), 0.05)


@pytest.fixture(scope="session")
def ellipse():
    return ellipse_levelset(0.05)


def disk_domain(R=0.3, cx=0.0, cy=0.0):
    """Disk with a dummy one-dimensional parameter, handy for small unit meshes."""
    return LevelSetDomain(
        lambda p, mu: (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2 - R**2,
        ((-1.0, 1.0),), (0.0,), name="disk",
    )


@pytest.fixture(scope="session")
def disk_active():
    mesh = build_structured_mesh((-1.0, 1.0, -1.0, 1.0), 0.1)
    dom = disk_domain(0.55, 0.03, -0.02)
    return classify(mesh, dom, [0.0])


def random_mu(box, rng):
    return np.array([rng.uniform(lo, hi) for lo, hi in box])

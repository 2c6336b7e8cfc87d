import numpy as np
import pytest

from acoustic_axes.media import Material


def random_unit(rng, count=None):
    v = rng.normal(size=(count or 1, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v if count else v[0]


def random_orthorhombic(rng):
    """Positive-definite orthorhombic material with loosely realistic constants."""
    while True:
        k = {
            "C11": rng.uniform(100, 300),
            "C22": rng.uniform(100, 300),
            "C33": rng.uniform(100, 300),
            "C44": rng.uniform(20, 100),
            "C55": rng.uniform(20, 100),
            "C66": rng.uniform(20, 100),
            "C12": rng.uniform(10, 120),
            "C13": rng.uniform(10, 120),
            "C23": rng.uniform(10, 120),
        }
        m = Material.orthorhombic(density=rng.uniform(1, 5), **k)
        if np.all(np.linalg.eigvalsh(m.stiffness) > 0):
            return m


def random_triclinic(rng, scale=100.0):
    a = rng.normal(size=(6, 6))
    c = a @ a.T + 6 * np.eye(6)
    return Material(scale * c / np.abs(c).max(), rng.uniform(1, 5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cubic_311():
    return Material.cubic(3.0, 1.0, 1.0, 1.0)


@pytest.fixture
def cubic_411():
    return Material.cubic(4.0, 1.0, 1.0, 1.0)


@pytest.fixture
def isotropic_111():
    return Material.isotropic(1.0, 1.0, 1.0)


@pytest.fixture
def hexagonal_conic():
    # C11, C12, C13, C33, C44; has a real cone of axes around x3
    return Material.hexagonal(10.0, 4.0, 3.0, 8.0, 2.0, 1.0)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

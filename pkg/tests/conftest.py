import numpy as np
import pytest

from smvar.manifold import build_torus


@pytest.fixture(scope="session")
def flat16():
    return build_torus(16)


@pytest.fixture(scope="session")
def flat8():
    return build_torus(8)


@pytest.fixture(scope="session")
def conformal8():
    flat = build_torus(8)
    x, y, z = flat.coordinates()
    psi = 0.3 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) + 0.1 * np.cos(2 * np.pi * z)
    return build_torus(8, 1.0, psi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance as acc
    except ImportError:
        return
    if not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.line(n, *acc.RESULTS[n]))

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ndsys.linalg import Colligation, random_cmatrix, spectral_norm

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def random_system(rng, n, dx, din, dout, scale=1.0):
    """Random system scaled so that ``sum_k ||G_k|| <= scale`` (hence dissipative for scale <= 1)."""
    a = np.stack([random_cmatrix(dx, dx, rng) for _ in range(n)])
    b = np.stack([random_cmatrix(dx, din, rng) for _ in range(n)])
    c = np.stack([random_cmatrix(dout, dx, rng) for _ in range(n)])
    d = np.stack([random_cmatrix(dout, din, rng) for _ in range(n)])
    alpha = Colligation(a, b, c, d)
    g = alpha.stacked()
    total = sum(spectral_norm(gk) for gk in g)
    return Colligation.from_stacked(g * scale / total if total > 0 else g, dx)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

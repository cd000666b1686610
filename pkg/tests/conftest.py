import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kernellab.data import make_rng

MASTER_SEED = 20240611

settings.register_profile(
    "kernellab", max_examples=40, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kernellab")


@pytest.fixture
def rng():
    return make_rng(MASTER_SEED)


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

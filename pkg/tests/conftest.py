import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("pbsiqa", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pbsiqa")

# acceptance verdicts, printed once at the end of the run
VERDICTS = {}


def record(number, ok, detail=""):
    VERDICTS[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_grid():
    from pbsiqa import GridSearchSpec
    return GridSearchSpec(C_grid=(1.0, 16.0), gamma_grid=(0.5, 4.0), folds=3)


@pytest.fixture(scope="session")
def stereo_samples():
    from pbsiqa.synthetic import make_samples
    return make_samples(n_sources=4, levels=3, views=2, size=40, seed=3)


@pytest.fixture(scope="session")
def stereo_dataset(tmp_path_factory):
    from pbsiqa.synthetic import write_dataset
    root = tmp_path_factory.mktemp("stereo")
    return write_dataset(root, n_sources=4, levels=3, views=2, size=40, seed=3)


@pytest.fixture(scope="session")
def mvd_dataset(tmp_path_factory):
    from pbsiqa.synthetic import write_dataset
    root = tmp_path_factory.mktemp("mvd")
    return write_dataset(root, n_sources=4, levels=3, views=3, depth=True, size=40, seed=5)

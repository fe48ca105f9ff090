import numpy as np
import pytest

from cure.tensor import precision


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def f64():
    with precision(64):
        yield


@pytest.fixture(scope="session")
def overfit_run():
    """(sample, checkpoint, seconds) for the single-triplet overfit training run."""
    import time

    from cure.trainer import train
    from scenes import TEST_CONFIG, overfit_sample

    sample = overfit_sample()
    start = time.perf_counter()
    ckpt = train([sample], TEST_CONFIG)
    return sample, ckpt, time.perf_counter() - start


@pytest.fixture(scope="session")
def wide_run():
    """Training run on frames 0, 2, 4 of the five-frame scene at t = 0.5."""
    import time

    from cure.trainer import train
    from scenes import TEST_CONFIG, wide_sample

    sample = wide_sample()
    start = time.perf_counter()
    ckpt = train([sample], TEST_CONFIG)
    return sample, ckpt, time.perf_counter() - start


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

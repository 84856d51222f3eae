import os

import numpy as np
import pytest

from wmvipd.experiments import synthetic_dataset

DATA_ENV = "WMVIPD_DATA"


def pyrim_path():
    root = os.environ.get(DATA_ENV)
    if not root:
        return None
    path = os.path.join(root, "pyrim_scale")
    return path if os.path.isfile(path) else None


def load_pyrim():
    path = pyrim_path()
    if path is None:
        return None
    from wmvipd.dataio import load_libsvm

    return load_libsvm(path, 27)


@pytest.fixture
def small_data():
    return synthetic_dataset(m=12, n=5, seed=3)


@pytest.fixture
def surrogate():
    return synthetic_dataset(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """``report(number, ok, detail)`` records one pass/fail line and asserts ``ok``."""

    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)

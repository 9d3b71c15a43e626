from pathlib import Path

import numpy as np
import pytest

from mmifs.dataset import Dataset, SplitPair

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"


def make_split(x_train, y_train, x_test, y_test, n_classes=None) -> SplitPair:
    y_train = np.asarray(y_train)
    y_test = np.asarray(y_test)
    c = n_classes or int(max(y_train.max(), y_test.max())) + 1
    tr = Dataset("train", np.asarray(x_train, float), y_train, c)
    te = Dataset("test", np.asarray(x_test, float), y_test, c)
    return SplitPair(tr, te, 0, 0.5, np.arange(len(y_train)),
                     np.arange(len(y_test)) + len(y_train))


@pytest.fixture
def separable_split():
    """Two tight 2-D clusters, class 0 near the origin and class 1 near (10, 10)."""
    rng = np.random.default_rng(3)
    a = rng.normal(0, 0.3, size=(10, 2))
    b = rng.normal(10, 0.3, size=(10, 2))
    x_train = np.vstack([a[:6], b[:6]])
    y_train = np.array([0] * 6 + [1] * 6)
    x_test = np.vstack([a[6:], b[6:]])
    y_test = np.array([0] * 4 + [1] * 4)
    return make_split(x_train, y_train, x_test, y_test)


@pytest.fixture
def wine_path():
    return DATA / "wine.csv"


@pytest.fixture
def breast_cancer_path():
    return DATA / "breast_cancer.csv"


# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

import numpy as np
import pytest

from agda_pl.problems import DatasetKind, gen_rls_dataset, make_logistic_bilinear, make_rls, make_toy


@pytest.fixture(scope="session")
def toy():
    return make_toy()


@pytest.fixture(scope="session")
def logistic():
    return make_logistic_bilinear()


@pytest.fixture(scope="session")
def small_rls():
    # n=50 samples, m=20 features, rows scaled by 1/sqrt(n)
    data = gen_rls_dataset(DatasetKind.DATASET1, (50, 20), seed=0, row_scale=1 / np.sqrt(50))
    return make_rls(data)


@pytest.fixture(scope="session")
def tiny_rls():
    data = gen_rls_dataset(DatasetKind.DATASET3, (12, 4), seed=3)
    return make_rls(data)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)

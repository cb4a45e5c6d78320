import numpy as np
import pytest
import scipy.sparse as sp

from daac.matcore import SparseMatrix


def random_instance(rng, n, k, density=0.3, symmetric_R=True):
    """Random (S, R, U, H) with S signed sparse and R nonnegative, no zero-degree rows."""
    S = sp.random(n, n, density=density, random_state=rng, data_rvs=lambda m: rng.normal(size=m))
    S = SparseMatrix(S)
    R = sp.random(n, n, density=density, random_state=rng, data_rvs=lambda m: rng.uniform(0.5, 2, m))
    R = R + sp.eye(n) * 0.0
    R = (R + R.T) if symmetric_R else R
    ring = sp.coo_matrix((np.ones(n), (np.arange(n), (np.arange(n) + 1) % n)), shape=(n, n))
    R = SparseMatrix(R + ring + ring.T, nonnegative=True)
    U = rng.uniform(0.1, 1.5, size=(n, k))
    H = rng.normal(size=(k, k))
    return S, R, U, H


def dense_normalize(R):
    d = R.sum(axis=1)
    inv = np.where(d > 0, 1 / np.sqrt(np.where(d > 0, d, 1)), 0.0)
    return R * inv[:, None] * inv[None, :]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])

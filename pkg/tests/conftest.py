import numpy as np
import pytest

from mrsvm.core import Dataset, LabeledSample, SparseVector

_ACCEPTANCE = pytest.StashKey[list]()


def dataset_from_arrays(X, y, start_id=0):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    samples = tuple(
        LabeledSample(start_id + k, SparseVector.from_dense(X[k]), int(y[k])) for k in range(len(y))
    )
    return Dataset(samples, X.shape[1])


def linear_problem(seed, n=1000, dim=20, margin=0.2, noise=0.0):
    """Gaussian points labeled by a random hyperplane.

    Points within ``margin`` of the plane are discarded, then a ``noise``
    fraction of labels is flipped.
    """
    rng = np.random.default_rng(seed)
    w = rng.normal(size=dim)
    w /= np.linalg.norm(w)
    X = np.empty((0, dim))
    while len(X) < n:
        cand = rng.normal(size=(2 * n, dim))
        X = np.vstack([X, cand[np.abs(cand @ w) > margin]])
    X = X[:n]
    y = np.where(X @ w > 0, 1, -1)
    flip = rng.random(n) < noise
    y[flip] *= -1
    return dataset_from_arrays(X, y)


def three_blobs(seed, per_class=40, spread=0.4):
    rng = np.random.default_rng(seed)
    centers = {-1: (-3.0, 0.0), 0: (0.0, 3.0), 1: (3.0, 0.0)}
    X, y = [], []
    for label, c in centers.items():
        X.append(rng.normal(loc=c, scale=spread, size=(per_class, 2)))
        y += [label] * per_class
    return dataset_from_arrays(np.vstack(X), y)


@pytest.fixture
def two_point():
    return dataset_from_arrays([[0.0], [2.0]], [-1, 1])


@pytest.fixture
def acceptance_report(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(criterion, passed, detail=""):
        lines.append(f"{'PASS' if passed else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else ""))
        return passed

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

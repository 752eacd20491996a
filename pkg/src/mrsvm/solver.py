"""Soft-margin binary SVM trained on the dual by sequential minimal optimization.

The dual problem solved is::

    max  sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j)
    s.t. sum(alpha * y) = 0,  0 <= alpha_i <= C

Each step optimizes two multipliers analytically. The first is the sample
that violates its optimality condition the most; the second is the partner,
among those that can move in the opposite feasible direction, whose error
differs most from the first (maximal ``|E_i - E_j|``). Training stops once
the largest violation gap is within ``kkt_tolerance``, which guarantees
every per-sample KKT condition holds to that tolerance.
"""

from __future__ import annotations

import functools
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .core import Dataset, LabeledSample, SparseVector, vectors_to_csr
from .errors import ContractViolation, DegenerateTrainingError

log = logging.getLogger(__name__)

KERNELS = ("linear", "rbf")
LOSSES = ("zero_one", "hinge")

# Full Gram matrices above this many samples are replaced by a column cache.
FULL_GRAM_LIMIT = 4000
_TAU = 1e-12
# Kernel blocks are computed with a dense product when both operands fit in this many cells.
_DENSE_CELLS = 20_000_000
_CONVERGED, _STALLED, _CAPPED = 0, 1, 2
# SMO stops at this fraction of kkt_tolerance so the dual objective is also near-exact.
STOP_FRACTION = 0.1


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ContractViolation(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf":
            if self.gamma is None or not self.gamma > 0:
                raise ContractViolation("rbf kernel requires gamma > 0")
        elif self.gamma is not None:
            raise ContractViolation("linear kernel takes no gamma")


@dataclass(frozen=True)
class SolverConfig:
    c: float = 1.0
    kernel: KernelSpec = KernelSpec()
    kkt_tolerance: float = 1e-3
    max_passes: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ContractViolation(f"C must be a positive finite number, got {self.c}")
        if not self.kkt_tolerance > 0:
            raise ContractViolation("kkt_tolerance must be positive")
        if self.max_passes < 1:
            raise ContractViolation("max_passes must be at least 1")


@dataclass(frozen=True)
class SvmModel:
    support_samples: tuple[LabeledSample, ...]
    alphas: tuple[float, ...]
    bias: float
    kernel: KernelSpec
    c: float
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "support_samples", tuple(self.support_samples))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.alphas) != len(self.support_samples):
            raise ContractViolation("alphas and support samples differ in length")
        for a in self.alphas:
            if not 0 < a <= self.c:
                raise ContractViolation(f"alpha {a} outside (0, C={self.c}]")
        for s in self.support_samples:
            if s.features.dimension != self.dimension:
                raise ContractViolation("support vector dimension does not match model")

    @property
    def support_ids(self) -> list[int]:
        return [s.id for s in self.support_samples]

    @functools.cached_property
    def _coef(self) -> np.ndarray:
        return np.array([a * s.label for a, s in zip(self.alphas, self.support_samples)])

    @functools.cached_property
    def _sv_matrix(self):
        return vectors_to_csr([s.features for s in self.support_samples], self.dimension)

    @functools.cached_property
    def weights(self) -> np.ndarray:
        """Primal weight vector; linear kernel only."""
        if self.kernel.kind != "linear":
            raise ContractViolation("primal weights exist only for the linear kernel")
        return np.asarray(self._sv_matrix.T @ self._coef).ravel()

    def negated(self) -> SvmModel:
        """Model whose decision function is exactly ``-f``."""
        return SvmModel(
            tuple(s.with_label(-s.label) for s in self.support_samples),
            self.alphas,
            -self.bias,
            self.kernel,
            self.c,
            self.dimension,
        )


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    bias: float
    iterations: int
    converged: bool


def kernel_matrix(kernel: KernelSpec, a, b) -> np.ndarray:
    """Dense kernel block between the rows of two CSR matrices."""
    cells = (a.shape[0] + b.shape[0]) * a.shape[1]
    if cells <= _DENSE_CELLS and a.nnz + b.nnz > 0.1 * cells:
        inner = a.toarray() @ b.toarray().T
    else:
        inner = np.asarray((a @ b.T).todense())
    if kernel.kind == "linear":
        return inner
    sq_a = np.asarray(a.multiply(a).sum(axis=1)).ravel()
    sq_b = np.asarray(b.multiply(b).sum(axis=1)).ravel()
    dist = np.maximum(sq_a[:, None] + sq_b[None, :] - 2.0 * inner, 0.0)
    return np.exp(-kernel.gamma * dist)


class _Gram:
    """Row access to the training Gram matrix, precomputed or cached by row."""

    def __init__(self, x, kernel: KernelSpec, cache_rows: int = 2048):
        self.x = x
        self.kernel = kernel
        n = x.shape[0]
        if n <= FULL_GRAM_LIMIT:
            self.full = kernel_matrix(kernel, x, x)
            self.diag = self.full.diagonal().copy()
        else:
            self.full = None
            self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
            self.cache_rows = cache_rows
            if kernel.kind == "linear":
                self.diag = np.asarray(x.multiply(x).sum(axis=1)).ravel()
            else:
                self.diag = np.ones(n)

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is None:
            r = kernel_matrix(self.kernel, self.x[i], self.x).ravel()
            self.cache[i] = r
            if len(self.cache) > self.cache_rows:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return r


@numba.njit(cache=True)
def _pair_step(a_i, a_j, pos_i, pos_j, v_i, v_j, curvature, c):
    """Analytic update of one pair along its feasible line, clipped to the box."""
    if curvature <= 0.0:
        curvature = _TAU
    step = (v_i - v_j) / curvature
    room_i = c - a_i if pos_i else a_i
    room_j = a_j if pos_j else c - a_j
    step = min(step, room_i, room_j)
    y_i = 1.0 if pos_i else -1.0
    y_j = 1.0 if pos_j else -1.0
    # bounds are snapped exactly so that 0 < alpha <= C holds without drift
    if step == room_i:
        new_i = c if pos_i else 0.0
    else:
        new_i = min(max(a_i + y_i * step, 0.0), c)
    if step == room_j:
        new_j = 0.0 if pos_j else c
    else:
        new_j = min(max(a_j - y_j * step, 0.0), c)
    return new_i, new_j


@numba.njit(cache=True)
def _smo_dense(k, yp, c, tol, max_passes, max_iter):
    n = yp.shape[0]
    alpha = np.zeros(n)
    # v_t = -y_t * grad_t = y_t - f_t, with f the decision function minus its bias.
    v = yp.copy()
    pos = yp > 0
    status = _CAPPED
    stalled = 0
    it = 0
    while it < max_iter:
        i = -1
        j = -1
        v_max = -np.inf
        v_min = np.inf
        for t in range(n):
            a = alpha[t]
            if (a < c) if pos[t] else (a > 0.0):
                if v[t] > v_max:
                    v_max = v[t]
                    i = t
            if (a > 0.0) if pos[t] else (a < c):
                if v[t] < v_min:
                    v_min = v[t]
                    j = t
        if i < 0 or j < 0 or v_max - v_min <= tol:
            status = _CONVERGED
            break
        it += 1
        old_i = alpha[i]
        old_j = alpha[j]
        new_i, new_j = _pair_step(old_i, old_j, pos[i], pos[j], v[i], v[j],
                                  k[i, i] + k[j, j] - 2.0 * k[i, j], c)
        d_i = (new_i - old_i) * yp[i]
        d_j = (new_j - old_j) * yp[j]
        if d_i == 0.0 and d_j == 0.0:
            stalled += 1
            if stalled >= max_passes:
                status = _STALLED
                break
            continue
        stalled = 0
        alpha[i] = new_i
        alpha[j] = new_j
        for t in range(n):
            v[t] -= k[i, t] * d_i + k[j, t] * d_j
    return alpha, v, it, status


def _smo_rows(row, diag_p, yp, c, tol, max_passes, max_iter):
    """Same iteration as ``_smo_dense`` with kernel rows fetched on demand."""
    n = len(yp)
    alpha = np.zeros(n)
    v = yp.copy()
    pos = yp > 0
    up = pos.copy()
    low = ~pos
    neg_inf = np.full(n, -np.inf)
    pos_inf = np.full(n, np.inf)
    status = _CAPPED
    stalled = 0
    it = 0
    while it < max_iter:
        i = int(np.argmax(np.where(up, v, neg_inf)))
        j = int(np.argmin(np.where(low, v, pos_inf)))
        if not (up[i] and low[j]) or v[i] - v[j] <= tol:
            status = _CONVERGED
            break
        it += 1
        k_i = row(i)
        k_j = row(j)
        old_i, old_j = alpha[i], alpha[j]
        new_i, new_j = _pair_step(old_i, old_j, pos[i], pos[j], v[i], v[j],
                                  diag_p[i] + diag_p[j] - 2.0 * k_i[j], c)
        d_i = (new_i - old_i) * yp[i]
        d_j = (new_j - old_j) * yp[j]
        if d_i == 0.0 and d_j == 0.0:
            stalled += 1
            if stalled >= max_passes:
                status = _STALLED
                break
            continue
        stalled = 0
        alpha[i] = new_i
        alpha[j] = new_j
        v -= k_i * d_i + k_j * d_j
        for t in (i, j):
            up[t] = (alpha[t] < c) if pos[t] else (alpha[t] > 0)
            low[t] = (alpha[t] > 0) if pos[t] else (alpha[t] < c)
    return alpha, v, it, status


def solve_dual(gram, y: np.ndarray, c: float, tol: float = 1e-3, max_passes: int = 10,
               seed: int = 0, max_iter: int | None = None) -> DualSolution:
    """Run SMO on a precomputed kernel.

    ``gram`` is either a dense ``(n, n)`` array or an object with ``row(i)``
    and ``diag``. ``seed`` fixes the index order used to break ties between
    equally violating samples. ``max_passes`` consecutive steps that leave
    every multiplier bitwise unchanged end the run as stalled.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if max_iter is None:
        max_iter = max(100_000, 200 * n)

    perm = np.random.default_rng(seed).permutation(n)
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    yp = np.ascontiguousarray(y[perm])
    if isinstance(gram, np.ndarray):
        k_perm = np.ascontiguousarray(gram[np.ix_(perm, perm)], dtype=np.float64)
        alpha, v, it, status = _smo_dense(k_perm, yp, float(c), float(tol), int(max_passes), int(max_iter))
    else:
        def row(t):
            return gram.row(perm[t])[perm]
        diag_p = np.asarray(gram.diag)[perm]
        alpha, v, it, status = _smo_rows(row, diag_p, yp, float(c), tol, max_passes, max_iter)
    if status == _STALLED:
        log.warning("SMO stalled after %d iterations", it)
    elif status == _CAPPED:
        log.warning("SMO reached the iteration cap (%d) before converging", max_iter)

    bias = _bias(alpha, v, yp > 0, c)
    return DualSolution(alpha[inv], bias, int(it), status == _CONVERGED)


def _bias(alpha, v, pos, c) -> float:
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(np.mean(v[free]))
    # No free multiplier: midpoint of the interval of biases consistent with KKT.
    at_zero = alpha == 0
    at_c = alpha == c
    lower_set = (at_zero & pos) | (at_c & ~pos)
    upper_set = (at_zero & ~pos) | (at_c & pos)
    lower = v[lower_set].max() if lower_set.any() else None
    upper = v[upper_set].min() if upper_set.any() else None
    if lower is None and upper is None:
        return 0.0
    if lower is None:
        return float(upper)
    if upper is None:
        return float(lower)
    return float((lower + upper) / 2.0)


def _check_binary(data: Dataset):
    if len(data) == 0:
        raise ContractViolation("training data is empty")
    labels = set(data.labels)
    if not labels <= {-1, 1}:
        raise ContractViolation(f"binary training needs labels in {{-1, +1}}, got {sorted(labels)}")
    if len(labels) < 2:
        raise DegenerateTrainingError(f"training data has a single class {labels.pop():+d}")


def train_binary(data: Dataset, config: SolverConfig = SolverConfig()) -> SvmModel:
    _check_binary(data)
    y = np.array(data.labels, dtype=float)
    gram = _Gram(data.to_csr(), config.kernel)
    sol = solve_dual(gram.full if gram.full is not None else gram, y, config.c,
                     tol=config.kkt_tolerance * STOP_FRACTION, max_passes=config.max_passes, seed=config.seed)
    support = np.flatnonzero(sol.alpha > 0)
    log.debug("trained on %d samples: %d SVs, %d iterations", len(data), len(support), sol.iterations)
    return SvmModel(
        tuple(data[k] for k in support),
        tuple(float(sol.alpha[k]) for k in support),
        sol.bias,
        config.kernel,
        config.c,
        data.dimension,
    )


def decision_values(model: SvmModel, vectors: Sequence[SparseVector]) -> np.ndarray:
    for x in vectors:
        if x.dimension != model.dimension:
            raise ContractViolation(f"vector dimension {x.dimension} != model dimension {model.dimension}")
    if not vectors:
        return np.zeros(0)
    if not model.support_samples:
        return np.full(len(vectors), model.bias)
    q = vectors_to_csr(vectors, model.dimension)
    if model.kernel.kind == "linear":
        return np.asarray(q @ model.weights).ravel() + model.bias
    return kernel_matrix(model.kernel, q, model._sv_matrix) @ model._coef + model.bias


def decision_value(model: SvmModel, x: SparseVector) -> float:
    return float(decision_values(model, [x])[0])


def _sign(values: np.ndarray) -> np.ndarray:
    return np.where(values >= 0, 1, -1)


def predict(model: SvmModel, x: SparseVector) -> int:
    """Sign of the decision value; an exact zero resolves to +1."""
    return 1 if decision_value(model, x) >= 0 else -1


def predict_many(model: SvmModel, vectors: Sequence[SparseVector]) -> list[int]:
    return [int(p) for p in _sign(decision_values(model, vectors))]


def empirical_risk(model: SvmModel, data: Dataset, loss: str = "zero_one") -> float:
    """Average loss of ``model`` over ``data``."""
    if len(data) == 0:
        raise ContractViolation("empirical risk of an empty dataset")
    if loss not in LOSSES:
        raise ContractViolation(f"unknown loss {loss!r}")
    y = np.array(data.labels, dtype=float)
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ContractViolation("empirical risk needs binary labels")
    f = decision_values(model, [s.features for s in data])
    if loss == "zero_one":
        losses = (_sign(f) != y).astype(float)
    else:
        losses = np.maximum(0.0, 1.0 - y * f)
    return float(losses.mean())


def dual_objective(model: SvmModel) -> float:
    """Dual objective value at the model's multipliers (non-SVs contribute nothing)."""
    if not model.support_samples:
        return 0.0
    k = kernel_matrix(model.kernel, model._sv_matrix, model._sv_matrix)
    coef = model._coef
    return float(np.sum(model.alphas) - 0.5 * coef @ k @ coef)


def kkt_violations(model: SvmModel, data: Dataset, tol: float) -> list[int]:
    """Ids of samples in ``data`` whose KKT condition fails by more than ``tol``."""
    alpha_by_id = dict(zip(model.support_ids, model.alphas))
    f = decision_values(model, [s.features for s in data])
    bad = []
    for s, fx in zip(data, f):
        a = alpha_by_id.get(s.id, 0.0)
        margin = s.label * fx
        if a == 0.0:
            ok = margin >= 1 - tol
        elif a < model.c:
            ok = abs(margin - 1) <= tol
        else:
            ok = margin <= 1 + tol
        if not ok:
            bad.append(s.id)
    return bad

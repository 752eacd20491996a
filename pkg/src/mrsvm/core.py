"""Sparse vectors, labeled samples, datasets and partitioning."""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation, InvalidPartitionError

BINARY_LABELS = (-1, 1)
TERNARY_LABELS = (-1, 0, 1)
PARTITION_STRATEGIES = ("stratified", "round_robin")


@dataclass(frozen=True)
class SparseVector:
    """Immutable sparse vector stored as parallel, index-sorted tuples.

    Use :meth:`from_pairs` or :meth:`from_dict` to build one from unsorted
    input; the constructor itself only validates.
    """

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ContractViolation("indices and values differ in length")
        if self.dimension < 0:
            raise ContractViolation("dimension must be non-negative")
        prev = -1
        for i, v in zip(self.indices, self.values):
            if i <= prev:
                raise ContractViolation("indices must be strictly increasing")
            if i >= self.dimension:
                raise ContractViolation(f"index {i} out of range for dimension {self.dimension}")
            if v == 0 or not math.isfinite(v):
                raise ContractViolation(f"stored value at index {i} must be finite and nonzero, got {v}")
            prev = i

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dimension: int) -> SparseVector:
        """Build from (index, value) pairs in any order; zero values are dropped."""
        items = sorted((int(i), float(v)) for i, v in pairs)
        for (a, _), (b, _) in zip(items, items[1:]):
            if a == b:
                raise ContractViolation(f"duplicate index {a}")
        for i, v in items:
            if i < 0:
                raise ContractViolation(f"negative index {i}")
            if not math.isfinite(v):
                raise ContractViolation(f"non-finite value at index {i}")
        items = [(i, v) for i, v in items if v != 0.0]
        return cls(tuple(i for i, _ in items), tuple(v for _, v in items), int(dimension))

    @classmethod
    def from_dict(cls, mapping: Mapping[int, float], dimension: int) -> SparseVector:
        return cls.from_pairs(mapping.items(), dimension)

    @classmethod
    def from_dense(cls, values: Sequence[float]) -> SparseVector:
        return cls.from_pairs(enumerate(values), len(values))

    @classmethod
    def empty(cls, dimension: int) -> SparseVector:
        return cls((), (), dimension)

    def __len__(self):
        return len(self.indices)

    def __getitem__(self, index: int) -> float:
        k = bisect.bisect_left(self.indices, index)
        if k < len(self.indices) and self.indices[k] == index:
            return self.values[k]
        return 0.0

    def items(self) -> Iterator[tuple[int, float]]:
        return zip(self.indices, self.values)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[list(self.indices)] = self.values
        return out

    def resized(self, dimension: int) -> SparseVector:
        """Same entries under a different dimension bound."""
        return SparseVector(self.indices, self.values, dimension)

    def scaled(self, factor: float) -> SparseVector:
        return SparseVector.from_pairs(((i, v * factor) for i, v in self.items()), self.dimension)


def dot(a: SparseVector, b: SparseVector) -> float:
    if a.dimension != b.dimension:
        raise ContractViolation(f"dimension mismatch: {a.dimension} != {b.dimension}")
    # Products are accumulated in ascending index order so dot(a, b) == dot(b, a) bitwise.
    ai, av, bi, bv = a.indices, a.values, b.indices, b.values
    p = q = 0
    total = 0.0
    while p < len(ai) and q < len(bi):
        if ai[p] == bi[q]:
            total += av[p] * bv[q]
            p += 1
            q += 1
        elif ai[p] < bi[q]:
            p += 1
        else:
            q += 1
    return total


@dataclass(frozen=True)
class LabeledSample:
    id: int
    features: SparseVector
    label: int

    def __post_init__(self):
        if self.id < 0:
            raise ContractViolation("sample id must be non-negative")

    def with_label(self, label: int) -> LabeledSample:
        return LabeledSample(self.id, self.features, label)


@dataclass(frozen=True)
class Dataset:
    samples: tuple[LabeledSample, ...]
    dimension: int
    _ids: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        ids = set()
        for s in self.samples:
            if s.features.dimension != self.dimension:
                raise ContractViolation(
                    f"sample {s.id} has dimension {s.features.dimension}, dataset has {self.dimension}"
                )
            if s.id in ids:
                raise ContractViolation(f"duplicate sample id {s.id}")
            ids.add(s.id)
        object.__setattr__(self, "_ids", frozenset(ids))

    def __len__(self):
        return len(self.samples)

    def __iter__(self) -> Iterator[LabeledSample]:
        return iter(self.samples)

    def __getitem__(self, k: int) -> LabeledSample:
        return self.samples[k]

    def __contains__(self, sample_id: int) -> bool:
        return sample_id in self._ids

    @property
    def ids(self) -> list[int]:
        return [s.id for s in self.samples]

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.samples]

    def classes(self) -> list[int]:
        return sorted(set(self.labels))

    def relabel(self, fn) -> Dataset:
        return Dataset(tuple(s.with_label(fn(s.label)) for s in self.samples), self.dimension)

    def resized(self, dimension: int) -> Dataset:
        return Dataset(
            tuple(LabeledSample(s.id, s.features.resized(dimension), s.label) for s in self.samples),
            dimension,
        )

    def to_csr(self) -> sp.csr_matrix:
        return vectors_to_csr([s.features for s in self.samples], self.dimension)


def vectors_to_csr(vectors: Sequence[SparseVector], dimension: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    np.cumsum([len(v) for v in vectors], out=indptr[1:])
    indices = np.fromiter((i for v in vectors for i in v.indices), dtype=np.int64, count=indptr[-1])
    data = np.fromiter((x for v in vectors for x in v.values), dtype=np.float64, count=indptr[-1])
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dimension))


def partition(data: Dataset, l: int, strategy: str = "stratified", seed: int = 0) -> list[Dataset]:
    """Split ``data`` into ``l`` disjoint datasets whose sizes differ by at most one.

    ``round_robin`` deals samples in file order. ``stratified`` shuffles each
    class with ``seed`` and deals the class-grouped sequence round robin, so
    every class is also spread within one sample per partition. Each
    partition keeps the original relative sample order.
    """
    if strategy not in PARTITION_STRATEGIES:
        raise ContractViolation(f"unknown partition strategy {strategy!r}")
    if l < 1:
        raise InvalidPartitionError(f"partition count must be positive, got {l}")
    if l > len(data):
        raise InvalidPartitionError(f"cannot split {len(data)} samples into {l} partitions")
    if l == 1:
        return [data]

    positions = list(range(len(data)))
    if strategy == "stratified":
        rng = random.Random(seed)
        by_class: dict[int, list[int]] = {}
        for pos in positions:
            by_class.setdefault(data[pos].label, []).append(pos)
        order = []
        for label in sorted(by_class):
            members = by_class[label]
            rng.shuffle(members)
            order.extend(members)
    else:
        order = positions

    buckets: list[list[int]] = [[] for _ in range(l)]
    for k, pos in enumerate(order):
        buckets[k % l].append(pos)
    return [Dataset(tuple(data[pos] for pos in sorted(b)), data.dimension) for b in buckets]

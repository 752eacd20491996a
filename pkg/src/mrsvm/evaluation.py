"""One-vs-rest multiclass models, confusion matrices and per-entity polarity ranking."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Dataset, SparseVector
from .errors import ContractViolation
from .solver import SvmModel, decision_values

CLASS_NAMES = {-1: "negative", 0: "neutral", 1: "positive"}
RANK_KEYS = {"total": None, "positive": 1, "negative": -1, "neutral": 0}


@dataclass(frozen=True)
class MulticlassModel:
    classes: tuple[int, ...]
    per_class_models: tuple[SvmModel, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "per_class_models", tuple(self.per_class_models))
        if len(self.classes) != len(self.per_class_models):
            raise ContractViolation("one binary model per class is required")
        if len(set(self.classes)) != len(self.classes):
            raise ContractViolation("classes must be distinct")

    @property
    def dimension(self) -> int:
        return self.per_class_models[0].dimension


def train_multiclass(data: Dataset, classes: Sequence[int],
                     trainer: Callable[[Dataset], SvmModel]) -> MulticlassModel:
    """Fit one ``trainer`` model per class on ``class -> +1, rest -> -1`` labels."""
    present = set(data.labels)
    missing = [c for c in classes if c not in present]
    if missing:
        raise ContractViolation(f"classes {missing} have no training samples")
    extra = present - set(classes)
    if extra:
        raise ContractViolation(f"training data has labels {sorted(extra)} outside {list(classes)}")
    models = tuple(trainer(data.relabel(lambda y, c=c: 1 if y == c else -1)) for c in classes)
    return MulticlassModel(tuple(classes), models)


def multiclass_scores(model: MulticlassModel, vectors: Sequence[SparseVector]) -> np.ndarray:
    """``(len(vectors), len(classes))`` matrix of per-class decision values."""
    return np.column_stack([decision_values(m, vectors) for m in model.per_class_models])


def _argmax_class(classes: Sequence[int], scores: Sequence[float]) -> int:
    best = None
    for c, s in sorted(zip(classes, scores)):
        if best is None or s > best[1]:
            best = (c, s)
    return best[0]


def predict_multiclass(model: MulticlassModel, x: SparseVector) -> int:
    """Class with the largest decision value; ties go to the smallest class code."""
    return _argmax_class(model.classes, multiclass_scores(model, [x])[0])


def predict_multiclass_many(model: MulticlassModel, vectors: Sequence[SparseVector]) -> list[int]:
    if not vectors:
        return []
    return [_argmax_class(model.classes, row) for row in multiclass_scores(model, vectors)]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with actual classes on rows and predicted classes on columns."""

    classes: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    def row_totals(self) -> list[int]:
        return [sum(r) for r in self.counts]

    def percentages(self, places: int = 2) -> list[list[Decimal]]:
        """Cell shares of the total in percent, rounded half-up."""
        if self.total == 0:
            raise ContractViolation("empty confusion matrix")
        q = Decimal(1).scaleb(-places)
        total = Decimal(self.total)
        return [[(Decimal(100 * n) / total).quantize(q, rounding=ROUND_HALF_UP) for n in r]
                for r in self.counts]

    def render(self, percent: bool = False) -> str:
        cells = self.percentages() if percent else self.counts
        body = [[f"% {v}" if percent else str(v) for v in r] for r in cells]
        header = ["actual \\ predicted"] + [f"{c:+d}" if c else "0" for c in self.classes]
        rows = [[f"{c:+d}" if c else "0"] + r for c, r in zip(self.classes, body)]
        widths = [max(len(row[k]) for row in [header] + rows) for k in range(len(header))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in [header] + rows]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["actual"] + [str(c) for c in self.classes])
        for c, r in zip(self.classes, self.counts):
            w.writerow([str(c)] + [str(n) for n in r])
        return buf.getvalue()


def confusion(actual: Sequence[int], predicted: Sequence[int], classes: Sequence[int]) -> ConfusionMatrix:
    if len(actual) != len(predicted):
        raise ContractViolation(f"{len(actual)} actual labels but {len(predicted)} predictions")
    if not actual:
        raise ContractViolation("nothing to evaluate")
    index = {c: k for k, c in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for a, p in zip(actual, predicted):
        if a not in index or p not in index:
            raise ContractViolation(f"class code outside {list(classes)}: actual={a}, predicted={p}")
        counts[index[a]][index[p]] += 1
    return ConfusionMatrix(tuple(classes), tuple(tuple(r) for r in counts))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ContractViolation("accuracy of an empty confusion matrix")
    return sum(cm.counts[k][k] for k in range(len(cm.classes))) / cm.total


@dataclass(frozen=True)
class EntityPolarity:
    entity_key: str
    per_class_counts: dict
    total: int

    @property
    def ratios(self) -> dict:
        return {c: n / self.total for c, n in self.per_class_counts.items()}

    def ratio(self, cls: int) -> float:
        return self.per_class_counts.get(cls, 0) / self.total


def aggregate_entities(rows: Iterable[tuple[str, int]]) -> list[EntityPolarity]:
    """Per-entity prediction counts, ordered by entity key; rows without a key are skipped."""
    counts: dict[str, Counter] = {}
    for key, cls in rows:
        if key:
            counts.setdefault(key, Counter())[cls] += 1
    return [EntityPolarity(k, dict(sorted(c.items())), sum(c.values())) for k, c in sorted(counts.items())]


def rank_entities(entities: Sequence[EntityPolarity], by: str = "total") -> list[EntityPolarity]:
    """Descending by message total or by one class ratio; ties by entity key."""
    if by not in RANK_KEYS:
        raise ContractViolation(f"unknown ranking key {by!r}; choose from {sorted(RANK_KEYS)}")
    cls = RANK_KEYS[by]
    if cls is None:
        return sorted(entities, key=lambda e: (-e.total, e.entity_key))
    return sorted(entities, key=lambda e: (-e.ratio(cls), e.entity_key))


def render_ranking(entities: Sequence[EntityPolarity], classes: Sequence[int] = (-1, 0, 1)) -> str:
    header = ["rank", "entity", "total"] + [f"{CLASS_NAMES.get(c, c)}_ratio" for c in classes]
    rows = [
        [str(k), e.entity_key, str(e.total)] + [f"{e.ratio(c):.4f}" for c in classes]
        for k, e in enumerate(entities, 1)
    ]
    widths = [max(len(r[k]) for r in [header] + rows) for k in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) if k == 1 else cell.rjust(w) for k, (cell, w) in enumerate(zip(r, widths)))
        for r in [header] + rows
    )


def ranking_csv(entities: Sequence[EntityPolarity], classes: Sequence[int] = (-1, 0, 1)) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "entity_key", "total"] + [f"count_{c}" for c in classes] + [f"ratio_{c}" for c in classes])
    for k, e in enumerate(entities, 1):
        w.writerow([k, e.entity_key, e.total] + [e.per_class_counts.get(c, 0) for c in classes]
                   + [repr(e.ratio(c)) for c in classes])
    return buf.getvalue()

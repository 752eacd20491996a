"""Readers and writers for corpora, sparse datasets, models, vocabularies and predictions.

Message corpora are UTF-8 TSV, one ``entity_key<TAB>label<TAB>text`` record
per line, with ``label`` one of ``-1``, ``0``, ``1`` or ``?``. Sparse
datasets use ``label idx:val ...`` lines with strictly ascending 0-based
indices; ``#`` lines are comments, and a leading ``# dimension=N`` fixes
the feature dimension. Models and vocabularies are versioned text files
whose floats are written with ``repr`` so that loading is bit-exact.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Optional, Union

from .core import Dataset, LabeledSample, SparseVector
from .errors import ContractViolation, FormatError, ParseError
from .evaluation import MulticlassModel
from .solver import KernelSpec, SvmModel
from .text import Message, Vocabulary

MODEL_MAGIC = "mrsvm-model"
VOCAB_MAGIC = "mrsvm-vocab"
FORMAT_VERSION = 1
LABEL_CODES = {"-1": -1, "0": 0, "1": 1, "+1": 1}
PREDICTION_FIELDS = ["id", "entity_key", "predicted"]


def _read_lines(path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(path, 0, f"cannot read file: {exc}") from exc


def read_messages(path) -> list[Message]:
    messages = []
    for line_no, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        fields = line.split("\t", 2)
        if len(fields) != 3:
            raise ParseError(path, line_no, "expected entity_key<TAB>label<TAB>text")
        key, label, text = fields
        if label == "?":
            code = None
        elif label in LABEL_CODES:
            code = LABEL_CODES[label]
        else:
            raise ParseError(path, line_no, f"label must be -1, 0, 1 or ?, got {label!r}")
        if not text.strip():
            raise ParseError(path, line_no, "empty message text")
        messages.append(Message(len(messages), key.strip(), text, code))
    return messages


def _parse_sparse_line(path, line_no, line, dimension):
    parts = line.split()
    if parts[0] not in LABEL_CODES:
        raise ParseError(path, line_no, f"label must be -1, 0 or 1, got {parts[0]!r}")
    pairs = []
    prev = -1
    for tok in parts[1:]:
        idx, sep, val = tok.partition(":")
        try:
            i, v = int(idx), float(val)
        except ValueError:
            raise ParseError(path, line_no, f"malformed feature {tok!r}") from None
        if not sep or i < 0:
            raise ParseError(path, line_no, f"malformed feature {tok!r}")
        if i <= prev:
            raise ParseError(path, line_no, f"feature indices not ascending at {tok!r}")
        if not math.isfinite(v):
            raise ParseError(path, line_no, f"non-finite value in {tok!r}")
        if dimension is not None and i >= dimension:
            raise ParseError(path, line_no, f"index {i} outside declared dimension {dimension}")
        pairs.append((i, v))
        prev = i
    return LABEL_CODES[parts[0]], pairs


def read_sparse(path, dimension: Optional[int] = None) -> Dataset:
    """Load a sparse dataset; ids are assigned in file order."""
    rows = []
    declared = None
    for line_no, line in enumerate(_read_lines(path), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("dimension="):
                try:
                    declared = int(body.split("=", 1)[1])
                except ValueError:
                    raise ParseError(path, line_no, f"bad dimension header {stripped!r}") from None
            continue
        rows.append(_parse_sparse_line(path, line_no, stripped, declared))
    inferred = max((p[-1][0] + 1 for _, p in rows if p), default=0)
    dim = declared if declared is not None else inferred
    if dimension is not None:
        if dimension < inferred:
            raise ParseError(path, 0, f"features reach index {inferred - 1}, beyond dimension {dimension}")
        dim = dimension
    samples = tuple(
        LabeledSample(k, SparseVector.from_pairs(pairs, dim), label) for k, (label, pairs) in enumerate(rows)
    )
    return Dataset(samples, dim)


def ingest(path, fmt: str) -> Union[Dataset, list[Message]]:
    if fmt == "messages_tsv":
        return read_messages(path)
    if fmt == "sparse_svm":
        return read_sparse(path)
    raise ContractViolation(f"unknown input format {fmt!r}")


def _features_text(v: SparseVector) -> str:
    return " ".join(f"{i}:{x!r}" for i, x in v.items())


def write_sparse(path, data: Dataset) -> None:
    lines = [f"# dimension={data.dimension}"]
    for s in data:
        feats = _features_text(s.features)
        lines.append(f"{s.label} {feats}" if feats else str(s.label))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- models -----------------------------------------------------------------

def _binary_block(model: SvmModel) -> list[str]:
    lines = [
        f"kernel {model.kernel.kind}",
        f"gamma {model.kernel.gamma!r}" if model.kernel.gamma is not None else "gamma -",
        f"c {model.c!r}",
        f"bias {model.bias!r}",
        f"dimension {model.dimension}",
        f"support_vectors {len(model.support_samples)}",
    ]
    for s, a in zip(model.support_samples, model.alphas):
        feats = _features_text(s.features)
        lines.append(f"{s.id} {s.label} {a!r}" + (f" {feats}" if feats else ""))
    lines.append("end")
    return lines


def dumps_model(model: Union[SvmModel, MulticlassModel]) -> str:
    lines = [f"{MODEL_MAGIC} {FORMAT_VERSION}"]
    if isinstance(model, MulticlassModel):
        lines.append("kind multiclass")
        lines.append("classes " + " ".join(str(c) for c in model.classes))
        for c, m in zip(model.classes, model.per_class_models):
            lines.append(f"class {c}")
            lines.extend(_binary_block(m))
    else:
        lines.append("kind binary")
        lines.extend(_binary_block(model))
    return "\n".join(lines) + "\n"


def save_model(path, model) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


class _Cursor:
    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.pos = 0
        self.source = source

    def fail(self, message):
        raise FormatError(f"{self.source}:{self.pos}: {message}")

    def next(self) -> str:
        if self.pos >= len(self.lines):
            self.pos += 1
            self.fail("unexpected end of file (truncated?)")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def field(self, name: str) -> str:
        key, _, value = self.next().partition(" ")
        if key != name:
            self.fail(f"expected {name!r}, found {key!r}")
        return value

    def header(self, magic: str):
        first = self.next() if self.lines else self.fail("empty file")
        tag, _, version = first.partition(" ")
        if tag != magic:
            self.fail(f"not a {magic} file")
        if version != str(FORMAT_VERSION):
            self.fail(f"unsupported format version {version!r} (expected {FORMAT_VERSION})")


def _parse_binary(cur: _Cursor) -> SvmModel:
    try:
        kind = cur.field("kernel")
        gamma_text = cur.field("gamma")
        kernel = KernelSpec(kind, None if gamma_text == "-" else float(gamma_text))
        c = float(cur.field("c"))
        bias = float(cur.field("bias"))
        dimension = int(cur.field("dimension"))
        count = int(cur.field("support_vectors"))
        samples, alphas = [], []
        for _ in range(count):
            parts = cur.next().split()
            if len(parts) < 3:
                cur.fail("support vector line needs id, label and alpha")
            pairs = []
            for tok in parts[3:]:
                i, _, v = tok.partition(":")
                pairs.append((int(i), float(v)))
            samples.append(LabeledSample(int(parts[0]), SparseVector.from_pairs(pairs, dimension), int(parts[1])))
            alphas.append(float(parts[2]))
        if cur.next() != "end":
            cur.fail("expected 'end'")
        return SvmModel(tuple(samples), tuple(alphas), bias, kernel, c, dimension)
    except (ValueError, ContractViolation) as exc:
        if isinstance(exc, FormatError):
            raise
        cur.fail(str(exc))


def loads_model(text: str, source: str = "<model>") -> Union[SvmModel, MulticlassModel]:
    cur = _Cursor(text, source)
    cur.header(MODEL_MAGIC)
    kind = cur.field("kind")
    if kind == "binary":
        model = _parse_binary(cur)
    elif kind == "multiclass":
        try:
            classes = [int(c) for c in cur.field("classes").split()]
        except ValueError:
            cur.fail("malformed class list")
        models = []
        for c in classes:
            if cur.field("class") != str(c):
                cur.fail(f"expected block for class {c}")
            models.append(_parse_binary(cur))
        model = MulticlassModel(tuple(classes), tuple(models))
    else:
        cur.fail(f"unknown model kind {kind!r}")
    if any(line.strip() for line in cur.lines[cur.pos:]):
        cur.fail("trailing content after model")
    return model


def load_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read model: {exc}") from exc
    return loads_model(text, str(path))


# -- vocabularies -----------------------------------------------------------

def dumps_vocabulary(vocab: Vocabulary) -> str:
    lines = [f"{VOCAB_MAGIC} {FORMAT_VERSION}", f"num_docs {vocab.num_docs}", f"terms {len(vocab.terms)}"]
    lines.extend(f"{t}\t{df}" for t, df in zip(vocab.terms, vocab.doc_freq))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_vocabulary(path, vocab: Vocabulary) -> None:
    Path(path).write_text(dumps_vocabulary(vocab), encoding="utf-8")


def loads_vocabulary(text: str, source: str = "<vocabulary>") -> Vocabulary:
    cur = _Cursor(text, source)
    cur.header(VOCAB_MAGIC)
    try:
        num_docs = int(cur.field("num_docs"))
        count = int(cur.field("terms"))
        terms, dfs = [], []
        for _ in range(count):
            term, sep, df = cur.next().partition("\t")
            if not sep or not term:
                cur.fail("expected term<TAB>df")
            terms.append(term)
            dfs.append(int(df))
        if cur.next() != "end":
            cur.fail("expected 'end'")
        return Vocabulary(tuple(terms), tuple(dfs), num_docs)
    except (ValueError, ContractViolation) as exc:
        if isinstance(exc, FormatError):
            raise
        cur.fail(str(exc))


def load_vocabulary(path) -> Vocabulary:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read vocabulary: {exc}") from exc
    return loads_vocabulary(text, str(path))


# -- predictions ------------------------------------------------------------

def write_predictions(path, rows: Iterable[tuple[int, str, int]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_FIELDS)
        for sample_id, key, predicted in rows:
            w.writerow([sample_id, key, predicted])


def read_predictions(path) -> list[tuple[int, str, int]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != PREDICTION_FIELDS:
                raise ParseError(path, 1, f"expected header {','.join(PREDICTION_FIELDS)}")
            rows = []
            for line_no, rec in enumerate(reader, 2):
                if not rec:
                    continue
                if len(rec) != 3:
                    raise ParseError(path, line_no, "expected id,entity_key,predicted")
                try:
                    rows.append((int(rec[0]), rec[1], int(rec[2])))
                except ValueError:
                    raise ParseError(path, line_no, "id and predicted must be integers") from None
            return rows
    except OSError as exc:
        raise ParseError(path, 0, f"cannot read file: {exc}") from exc

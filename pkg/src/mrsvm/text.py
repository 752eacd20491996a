"""Tokenization, stopword filtering, vocabulary and TF-IDF weighting for messages."""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import Dataset, LabeledSample, SparseVector
from .errors import ContractViolation, EmptyVocabularyError

# Turkish function words removed before vectorization.
TURKISH_STOPWORDS = (
    "acaba", "altı", "altmış", "ama", "bana", "bazı", "belki", "ben", "benden", "beni",
    "benim", "beş", "bi", "bin", "bir", "biri", "birkaç", "birkez", "birşey", "birşeyi", "biz",
    "bizden", "bizi", "bizim", "bu", "buna", "bunda", "bundan", "bunu", "bunun", "çok",
    "çünkü", "da", "daha", "dahi", "de", "defa", "diye", "doksan", "dokuz", "dört", "elli",
    "en", "gibi", "hem", "hep", "hepsi", "her", "hiç", "için", "iki", "ile", "ise",
    "katrilyon", "kez", "kırk", "ki", "kim", "kimden", "kime", "kimi", "mı", "milyar",
    "milyon", "mu", "mü", "nasıl", "ne", "neden", "nerde", "nerede", "nereye", "niçin", "niye",
    "on", "ona", "ondan", "onlar", "onlardan", "onların", "onlari", "onu", "otuz", "sanki",
    "sekiz", "seksen", "sen", "senden", "seni", "senin", "siz", "sizden", "sizi", "sizin",
    "şey", "şeyden", "şeyi", "şeyler", "şu", "şuna", "şunda", "şundan", "şunu", "trilyon",
    "tüm", "üç", "ve", "veya", "ya", "yani", "yedi", "yetmiş", "yirmi", "yüz"
)

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_WORD = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class Message:
    id: int
    entity_key: str
    text: str
    label: Optional[int] = None


def fold_case(text: str) -> str:
    """Lowercase with Turkish dotted/dotless i rules (İ -> i, I -> ı)."""
    return text.replace("İ", "i").replace("I", "ı").lower()


def normalize(word: str) -> str:
    return fold_case(unicodedata.normalize("NFC", word.strip()))


def tokenize(text: str) -> list[str]:
    """Split a message into lowercase word tokens.

    URLs and @mentions are removed, a hashtag keeps its body, anything that
    is not a letter or digit separates tokens, and single-character tokens
    are dropped.
    """
    text = unicodedata.normalize("NFC", text)
    text = _MENTION.sub(" ", _URL.sub(" ", text))
    return [t for t in _WORD.findall(fold_case(text)) if len(t) > 1]


class StopwordList:
    def __init__(self, words: Iterable[str]):
        self.words = frozenset(w for w in (normalize(w) for w in words) if w)

    @classmethod
    def default(cls) -> StopwordList:
        return cls(TURKISH_STOPWORDS)

    @classmethod
    def from_file(cls, path) -> StopwordList:
        """One word per line, UTF-8; blank lines are ignored."""
        return cls(Path(path).read_text(encoding="utf-8").splitlines())

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self):
        return len(self.words)


def remove_stopwords(tokens: Sequence[str], stops: StopwordList) -> list[str]:
    return [t for t in tokens if t not in stops]


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]
    num_docs: int
    term_to_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "doc_freq", tuple(int(d) for d in self.doc_freq))
        if len(self.terms) != len(self.doc_freq):
            raise ContractViolation("terms and doc_freq differ in length")
        if self.num_docs < 1:
            raise ContractViolation("num_docs must be positive")
        index = {t: k for k, t in enumerate(self.terms)}
        if len(index) != len(self.terms):
            raise ContractViolation("duplicate vocabulary term")
        for t, df in zip(self.terms, self.doc_freq):
            if not 1 <= df <= self.num_docs:
                raise ContractViolation(f"document frequency of {t!r} outside [1, {self.num_docs}]")
        object.__setattr__(self, "term_to_index", index)

    def __len__(self):
        return len(self.terms)


def build_vocabulary(docs: Sequence[Sequence[str]], min_df: int = 2,
                     max_features: Optional[int] = None) -> Vocabulary:
    """Document-frequency vocabulary with thresholding.

    Terms seen in fewer than ``min_df`` documents are dropped; ``max_features``
    then keeps the most frequent terms (ties by term). Retained terms are
    indexed in lexicographic order.
    """
    if not docs:
        raise ContractViolation("cannot build a vocabulary from no documents")
    if min_df < 1:
        raise ContractViolation("min_df must be positive")
    if max_features is not None and max_features < 1:
        raise ContractViolation("max_features must be positive")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    kept = [t for t, n in df.items() if n >= min_df]
    if max_features is not None and len(kept) > max_features:
        kept = sorted(kept, key=lambda t: (-df[t], t))[:max_features]
    if not kept:
        raise EmptyVocabularyError(f"no term reaches min_df={min_df}")
    terms = sorted(kept)
    return Vocabulary(tuple(terms), tuple(df[t] for t in terms), len(docs))


def idf(vocab: Vocabulary, term_index: int) -> float:
    if not 0 <= term_index < len(vocab.terms):
        raise ContractViolation(f"term index {term_index} out of range")
    return math.log10(vocab.num_docs / vocab.doc_freq[term_index])


def vectorize(tokens: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """Raw term count times IDF for every in-vocabulary token."""
    if not vocab.terms:
        raise ContractViolation("empty vocabulary")
    counts = Counter(vocab.term_to_index[t] for t in tokens if t in vocab.term_to_index)
    return SparseVector.from_pairs(((k, n * idf(vocab, k)) for k, n in counts.items()), len(vocab.terms))


def preprocess(text: str, stops: Optional[StopwordList]) -> list[str]:
    tokens = tokenize(text)
    return remove_stopwords(tokens, stops) if stops is not None else tokens


def fit_vocabulary(messages: Sequence[Message], stops: Optional[StopwordList] = None,
                   min_df: int = 2, max_features: Optional[int] = None) -> Vocabulary:
    return build_vocabulary([preprocess(m.text, stops) for m in messages], min_df, max_features)


def messages_to_dataset(messages: Sequence[Message], vocab: Vocabulary,
                        stops: Optional[StopwordList] = None) -> Dataset:
    """Vectorize the labeled messages; unlabeled ones are left out."""
    samples = tuple(
        LabeledSample(m.id, vectorize(preprocess(m.text, stops), vocab), m.label)
        for m in messages
        if m.label is not None
    )
    return Dataset(samples, len(vocab.terms))

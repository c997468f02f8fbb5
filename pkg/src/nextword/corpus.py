"""Corpus ingestion: preprocessing, vocabulary, splitting and query building.

Corpus files hold one user-typed sequence per line with tokens separated by
spaces; the user's own segmentation is kept as-is.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import N_RESERVED, PAD_ID, UNK_ID
from .errors import CorpusError, EmptyCorpus, TooFewSequences
from .io import atomic_write_text

NUM = "NUM"
PAD = "<s>"
UNK = "<unk>"

_DIGITS = re.compile(r"[0-9０-９]+")
_ASCII_WORD = re.compile(r"[A-Za-z]+")


def preprocess(tokens: Sequence[str]) -> list[str]:
    """Replace all-digit tokens by ``NUM`` and drop all-ASCII-letter tokens.

    Full-width digits count as digits.  Mixed tokens such as ``a1`` pass
    through.  The literal ``NUM`` is kept so the operation is idempotent.
    """
    out = []
    for tok in tokens:
        if _DIGITS.fullmatch(tok):
            out.append(NUM)
        elif tok == NUM:
            out.append(tok)
        elif _ASCII_WORD.fullmatch(tok):
            continue
        else:
            out.append(tok)
    return out


def read_corpus(path) -> list[list[str]]:
    """Read a raw corpus file; blank lines become empty sequences."""
    path = Path(path)
    if not path.exists():
        raise CorpusError("corpus file not found", path=path)
    sequences = []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"invalid UTF-8 ({exc.reason})", path=path, line=lineno)
            sequences.append([t for t in line.rstrip("\r\n").split(" ") if t])
    return sequences


@dataclass
class Vocabulary:
    """Dense word<->id map.  Ids 0 and 1 are the pad and unknown tokens."""

    words: list
    freqs: list

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def id(self, word: str) -> int:
        return self.index.get(word, UNK_ID)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.index.get(t, UNK_ID) for t in tokens]

    def word(self, i: int) -> str:
        return self.words[i]

    @property
    def n_recommendable(self) -> int:
        return len(self.words) - N_RESERVED

    @property
    def unk_trained(self) -> bool:
        return self.freqs[UNK_ID] > 0

    def char_lengths(self) -> np.ndarray:
        return np.array([len(w) for w in self.words], dtype=np.int64)

    def to_tsv(self) -> str:
        return "".join(f"{i}\t{w}\t{f}\n" for i, (w, f) in enumerate(zip(self.words, self.freqs)))

    def save(self, path):
        atomic_write_text(path, self.to_tsv())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        words, freqs = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3 or int(parts[0]) != lineno - 1:
                    raise CorpusError("malformed vocabulary line", path=path, line=lineno)
                words.append(parts[1])
                freqs.append(int(parts[2]))
        if len(words) < N_RESERVED or words[PAD_ID] != PAD or words[UNK_ID] != UNK:
            raise CorpusError("vocabulary lacks reserved entries", path=path)
        return cls(words, freqs)


def build_vocab(train: Sequence[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Vocabulary over preprocessed training sequences.

    Words seen at least ``min_count`` times get ids by descending frequency,
    then lexicographically.  The unknown token's frequency is the number of
    training tokens it absorbs.
    """
    if min_count < 1:
        raise ValueError("min_count must be positive")
    counts = Counter(t for seq in train for t in seq)
    if not counts:
        raise EmptyCorpus("training corpus contains no tokens")
    counts.pop(PAD, None)
    unk = counts.pop(UNK, 0)
    kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
    unk += sum(c for c in counts.values() if c < min_count)
    return Vocabulary([PAD, UNK] + kept, [0, unk] + [counts[w] for w in kept])


def split_indices(n: int, seed: int) -> tuple[list, list, list]:
    """Sorted line indices of the 80/10/10 train/valid/test partition."""
    if n < 10:
        raise TooFewSequences(f"need at least 10 sequences to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = (8 * n) // 10
    n_valid = n // 10
    parts = perm[:n_train], perm[n_train : n_train + n_valid], perm[n_train + n_valid :]
    return tuple(sorted(int(i) for i in part) for part in parts)


def split(corpus: Sequence, seed: int):
    """Split sequences into (train, valid, test) lists, order preserved."""
    tr, va, te = split_indices(len(corpus), seed)
    return [corpus[i] for i in tr], [corpus[i] for i in va], [corpus[i] for i in te]


@dataclass(frozen=True)
class EvalQuery:
    """A context with every word observed to follow it.

    ``truths`` is a sorted tuple of ``(word_id, multiplicity)``.
    """

    tokens: tuple
    context: tuple
    truths: tuple

    @property
    def U(self) -> int:
        return sum(m for _, m in self.truths)


def make_queries(corpus: Sequence[Sequence[str]], vocab: Vocabulary) -> list[EvalQuery]:
    """Aggregate (prefix, next word) pairs by identical prefix.

    Next words outside the vocabulary can never be recommended and are not
    kept as truths; a prefix left with no truths yields no query.  Queries
    come back sorted by context tokens.
    """
    agg: dict = {}
    for seq in corpus:
        for k in range(1, len(seq)):
            truth = vocab.id(seq[k])
            if truth < N_RESERVED:
                continue
            agg.setdefault(tuple(seq[:k]), Counter())[truth] += 1
    return [
        EvalQuery(tokens=ctx, context=tuple(vocab.ids(ctx)), truths=tuple(sorted(c.items())))
        for ctx, c in sorted(agg.items())
    ]


def queries_to_tsv(queries: Sequence[EvalQuery], vocab: Vocabulary) -> str:
    lines = []
    for q in queries:
        truths = " ".join(f"{vocab.word(w)}:{m}" for w, m in q.truths)
        lines.append(" ".join(q.tokens) + "\t" + truths + "\n")
    return "".join(lines)


def save_queries(path, queries, vocab):
    atomic_write_text(path, queries_to_tsv(queries, vocab))


def load_queries(path, vocab: Vocabulary) -> list[EvalQuery]:
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusError("malformed query line", path=path, line=lineno)
            tokens = tuple(parts[0].split(" "))
            truths = Counter()
            for item in parts[1].split(" "):
                word, _, count = item.rpartition(":")
                if not word or not count.isdigit() or word not in vocab:
                    raise CorpusError(f"bad truth entry {item!r}", path=path, line=lineno)
                truths[vocab.id(word)] += int(count)
            queries.append(
                EvalQuery(tokens=tokens, context=tuple(vocab.ids(tokens)), truths=tuple(sorted(truths.items())))
            )
    return queries


def save_manifest(path, indices):
    atomic_write_text(path, "".join(f"{i}\n" for i in indices))


def load_manifest(path) -> list[int]:
    with open(path, encoding="utf-8") as fh:
        return [int(line) for line in fh if line.strip()]

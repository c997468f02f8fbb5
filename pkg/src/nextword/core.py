"""Shared language-model contract and ranking primitives.

Every model family (counting, neural, interpolated) maps a context of word
ids to a probability vector over the whole vocabulary.  Reserved ids (the
sentence-start pad and the unknown-word id) always carry zero mass, so the
vector is a distribution over recommendable words only.  A model may instead
abstain for a context, which is reported as ``None``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDistribution, VocabularyMismatch

PAD_ID = 0
UNK_ID = 1
N_RESERVED = 2

Context = tuple  # tuple[int, ...], oldest word first


def recommendable_mask(vocab_size: int) -> np.ndarray:
    mask = np.ones(vocab_size, dtype=bool)
    mask[:N_RESERVED] = False
    return mask


@dataclass(frozen=True, eq=False)
class Distribution:
    """Read-only next-word probabilities indexed by word id."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.flags.writeable:
            p = p.copy()
            p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.shape[0]

    def __getitem__(self, word_id):
        return float(self.probs[word_id])

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs))

    def as_dict(self) -> dict:
        nz = np.flatnonzero(self.probs)
        return {int(i): float(self.probs[i]) for i in nz}


class LanguageModel(ABC):
    """Base class: subclasses implement ``_probs``.

    ``_probs`` receives a validated, non-empty context and returns either a
    float64 vector of length ``vocab_size`` that is zero at reserved ids and
    sums to one, or ``None`` to abstain.
    """

    vocab_size: int

    @abstractmethod
    def _probs(self, ctx: Context) -> Optional[np.ndarray]: ...

    def check_context(self, ctx: Sequence[int]) -> Context:
        ctx = tuple(int(w) for w in ctx)
        for w in ctx:
            if w < 0 or w >= self.vocab_size:
                raise VocabularyMismatch(
                    f"word id {w} outside vocabulary of size {self.vocab_size}"
                )
        return ctx

    def next_distribution(self, ctx: Sequence[int]) -> Optional[Distribution]:
        ctx = self.check_context(ctx)
        p = self._probs(ctx)
        if p is None:
            return None
        return Distribution(p)


def next_distribution(model: LanguageModel, ctx: Sequence[int]) -> Optional[Distribution]:
    """Next-word distribution for ``ctx``, or ``None`` when the model abstains."""
    return model.next_distribution(ctx)


def _as_array(dist) -> np.ndarray:
    return dist.probs if isinstance(dist, Distribution) else np.asarray(dist, dtype=np.float64)


def ranked_ids(dist) -> np.ndarray:
    """Ids with nonzero mass, by descending probability then ascending id."""
    p = _as_array(dist)
    ids = np.flatnonzero(p)
    # lexsort: last key is primary
    order = np.lexsort((ids, -p[ids]))
    return ids[order]


def top_k(dist, k: int) -> list[tuple[int, float]]:
    """The ``k`` most probable words as ``(word_id, prob)`` pairs.

    Ties go to the smaller id.  Words with zero mass are never listed, so the
    result is shorter than ``k`` when the support is small.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    p = _as_array(dist)
    ids = np.flatnonzero(p)
    if ids.size == 0:
        raise EmptyDistribution("distribution has no mass")
    if ids.size > 4 * k:
        # narrow to candidates first; the k-th largest value bounds the set
        kth = np.partition(p[ids], ids.size - k)[ids.size - k]
        ids = ids[p[ids] >= kth]
    order = np.lexsort((ids, -p[ids]))[:k]
    return [(int(i), float(p[i])) for i in ids[order]]


def truth_ranks(dist, truth_ids: Sequence[int]) -> list[int]:
    """1-based positions of ``truth_ids`` in the full deterministic ordering.

    The ordering covers every recommendable word, zero-probability ones
    included (they follow all positive ones, by id).
    """
    p = _as_array(dist)
    rec = recommendable_mask(p.shape[0])
    pr = np.where(rec, p, -1.0)
    ranks = []
    for t in truth_ids:
        pt = p[t]
        better = np.count_nonzero(pr > pt)
        tied_before = np.count_nonzero(pr[:t] == pt)
        ranks.append(int(better + tied_before + 1))
    return ranks


def softmax_masked(logits: np.ndarray) -> np.ndarray:
    """Softmax over recommendable ids; reserved ids get exactly zero."""
    z = logits[N_RESERVED:]
    z = z - z.max()
    e = np.exp(z)
    out = np.zeros_like(logits, dtype=np.float64)
    out[N_RESERVED:] = e / e.sum()
    return out

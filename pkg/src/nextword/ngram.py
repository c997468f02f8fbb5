"""Count-based models: maximum likelihood with backoff and interpolated Kneser-Ney.

Counts live in a trie whose path from the root spells a context newest word
first, so the longest available context for a history is found by walking
at most ``order - 1`` edges.  Each node keeps the words observed after its
context together with their counts.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .core import N_RESERVED, PAD_ID, LanguageModel
from .errors import ModelFormatError
from .io import atomic_write_text

MAX_ORDER = 3
DEFAULT_DISCOUNT = 0.5


class _Node:
    __slots__ = ("children", "follow", "raw", "cont")

    def __init__(self):
        self.children = {}  # older word -> node for the one-word-longer context
        self.follow = {}  # next word -> count
        self.raw = None
        self.cont = None


def _arrays(counter: dict):
    ids = np.array(sorted(w for w in counter if w >= N_RESERVED), dtype=np.int64)
    cnts = np.array([counter[w] for w in ids], dtype=np.float64)
    return ids, cnts, float(cnts.sum())


class NGramTable:
    """n-gram counts for orders ``1..order`` over one vocabulary.

    Only n-grams ending in a real (non-pad) word are stored.  Sequences are
    left-padded with ``order - 1`` pad ids, so the first word of a sequence
    has a full-length context.
    """

    def __init__(self, order: int, vocab_size: int):
        if order < 1:
            raise ValueError("order must be at least 1")
        self.order = order
        self.vocab_size = vocab_size
        self.root = _Node()
        self.frozen = False

    # -- building ---------------------------------------------------------
    def add_sequence(self, ids: Sequence[int]):
        if self.frozen:
            raise RuntimeError("table is frozen")
        hist = [PAD_ID] * (self.order - 1) + list(ids)
        for i in range(self.order - 1, len(hist)):
            w = hist[i]
            node = self.root
            node.follow[w] = node.follow.get(w, 0) + 1
            for k in range(1, self.order):
                node = node.children.setdefault(hist[i - k], _Node())
                node.follow[w] = node.follow.get(w, 0) + 1

    def add_ngram(self, ngram: Sequence[int], count: int):
        if self.frozen:
            raise RuntimeError("table is frozen")
        *ctx, w = ngram
        node = self.root
        for v in reversed(ctx):
            node = node.children.setdefault(v, _Node())
        node.follow[w] = node.follow.get(w, 0) + count

    def freeze(self) -> "NGramTable":
        def visit(node, depth):
            node.raw = _arrays(node.follow)
            if depth < self.order - 1:
                cont = {}
                for child in node.children.values():
                    for w in child.follow:
                        cont[w] = cont.get(w, 0) + 1
                node.cont = _arrays(cont)
            for child in node.children.values():
                visit(child, depth + 1)

        visit(self.root, 0)
        self.frozen = True
        return self

    # -- queries ----------------------------------------------------------
    def node(self, ctx: Sequence[int]) -> Optional[_Node]:
        node = self.root
        for v in reversed(tuple(ctx)):
            node = node.children.get(v)
            if node is None:
                return None
        return node

    def count(self, ngram: Sequence[int]) -> int:
        """Occurrences of ``ngram`` (any order up to ``self.order``)."""
        *ctx, w = ngram
        node = self.node(ctx)
        return 0 if node is None else node.follow.get(w, 0)

    def context_count(self, ctx: Sequence[int]) -> int:
        """Occurrences of ``ctx`` followed by a recommendable word."""
        node = self.node(ctx)
        return 0 if node is None else sum(c for w, c in node.follow.items() if w >= N_RESERVED)

    def followers(self, ctx: Sequence[int]) -> int:
        """Distinct recommendable words seen after ``ctx``."""
        node = self.node(ctx)
        return 0 if node is None else sum(1 for w in node.follow if w >= N_RESERVED)

    def continuation(self, ngram: Sequence[int]) -> int:
        """Distinct words seen immediately before ``ngram``."""
        *ctx, w = ngram
        node = self.node(ctx)
        if node is None:
            return 0
        return sum(1 for child in node.children.values() if w in child.follow)

    def ngrams(self, n: int) -> Iterable[tuple[tuple, int]]:
        """``(ngram, count)`` for every stored n-gram of length ``n``, sorted."""
        out = []

        def walk(node, rev_ctx):
            if len(rev_ctx) == n - 1:
                ctx = tuple(reversed(rev_ctx))
                out.extend((ctx + (w,), c) for w, c in node.follow.items())
                return
            for v, child in node.children.items():
                walk(child, rev_ctx + (v,))

        walk(self.root, ())
        return sorted(out)

    def counts(self, n: int) -> dict:
        return dict(self.ngrams(n))

    def history(self, ctx: Sequence[int]) -> tuple:
        """Last ``order - 1`` words of the pad-extended context."""
        if self.order == 1:
            return ()
        padded = (PAD_ID,) * (self.order - 1) + tuple(ctx)
        return padded[-(self.order - 1):]


def count_ngrams(train: Iterable[Sequence[int]], vocab_size: int, order: int = MAX_ORDER) -> NGramTable:
    """Count every n-gram up to ``order`` within each id sequence."""
    table = NGramTable(order, vocab_size)
    for seq in train:
        table.add_sequence(seq)
    return table.freeze()


def estimate_discounts(table: NGramTable) -> dict:
    """Per-order absolute discount ``n1 / (n1 + 2 n2)`` for orders 2..N.

    ``n1`` and ``n2`` count n-grams of that order (with a recommendable last
    word) seen exactly once and twice.  Falls back to 0.5 when ``n2`` is zero,
    where the ratio would degenerate to 1 (or 0/0).
    """
    if table.order < 2:
        raise ValueError("discounts need a table of order >= 2")
    d = {}
    for n in range(2, table.order + 1):
        n1 = n2 = 0
        for ngram, c in table.ngrams(n):
            if ngram[-1] < N_RESERVED:
                continue
            n1 += c == 1
            n2 += c == 2
        d[n] = n1 / (n1 + 2 * n2) if n2 else DEFAULT_DISCOUNT
    return d


def kn_interpolate(ids, counts, discount: float, lower: np.ndarray) -> np.ndarray:
    """One Kneser-Ney level: discounted counts plus back-off mass times ``lower``.

    ``ids``/``counts`` list the words seen after the context.  With total
    ``T`` and ``t`` distinct followers the result is
    ``max(0, c(w) - d) / T + (d t / T) * lower(w)``.
    """
    ids = np.asarray(ids, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    out = lower * (discount * ids.size / total)
    out[ids] += np.maximum(counts - discount, 0.0) / total
    return out


class NGramModel(LanguageModel):
    """Unsmoothed maximum-likelihood n-gram model.

    Uses the longest context (down to one word) with a nonzero count and
    abstains when none exists, unless ``unigram_fallback`` is set.
    """

    kind = "ngram"

    def __init__(self, table: NGramTable, unigram_fallback: bool = False):
        self.table = table
        self.vocab_size = table.vocab_size
        self.unigram_fallback = unigram_fallback

    def matching_node(self, ctx) -> Optional[_Node]:
        best = None
        node = self.table.root
        hist = self.table.history(ctx)
        for k in range(1, len(hist) + 1):
            node = node.children.get(hist[-k])
            if node is None:
                break
            if node.raw[2] > 0:
                best = node
        if best is None and self.unigram_fallback and self.table.root.raw[2] > 0:
            best = self.table.root
        return best

    def _probs(self, ctx):
        node = self.matching_node(ctx)
        if node is None:
            return None
        ids, cnts, total = node.raw
        p = np.zeros(self.vocab_size)
        p[ids] = cnts / total
        return p


class KneserNeyModel(LanguageModel):
    """Interpolated Kneser-Ney with one discount per order.

    The highest order uses raw counts; lower orders use continuation counts
    (distinct left neighbours), except for contexts beginning with the pad,
    which cannot be extended leftwards and keep raw counts.  The recursion
    ends in the continuation unigram, itself interpolated with a uniform
    distribution over recommendable words so no word gets zero mass.
    """

    kind = "ngram-kn"

    def __init__(self, table: NGramTable, discounts: Optional[dict] = None):
        if table.order < 2:
            raise ValueError("Kneser-Ney needs order >= 2")
        self.table = table
        self.vocab_size = table.vocab_size
        self.discounts = dict(discounts) if discounts is not None else estimate_discounts(table)
        for n, d in self.discounts.items():
            if not 0.0 <= d < 1.0:
                raise ValueError(f"discount for order {n} must lie in [0, 1), got {d}")
        self._base = self._unigram_level()
        self._base.flags.writeable = False

    def _unigram_level(self):
        n_rec = self.vocab_size - N_RESERVED
        uniform = np.zeros(self.vocab_size)
        uniform[N_RESERVED:] = 1.0 / n_rec
        ids, cnts, total = self.table.root.cont
        if total == 0:
            return uniform
        return kn_interpolate(ids, cnts, self.discounts[2], uniform)

    def _probs(self, ctx):
        hist = self.table.history(ctx)
        p = self._base
        node = self.table.root
        for k in range(1, len(hist) + 1):
            node = node.children.get(hist[-k])
            if node is None:
                break
            n = k + 1
            ids, cnts, total = node.raw if (n == self.table.order or hist[-k] == PAD_ID) else node.cont
            if total == 0:
                continue
            p = kn_interpolate(ids, cnts, self.discounts[n], p)
        return p.copy() if p is self._base else p


def prob_mle(table: NGramTable, ctx: Sequence[int], w: int, unigram_fallback: bool = False) -> Optional[float]:
    """MLE probability of ``w`` after ``ctx``; ``None`` when the model abstains."""
    p = NGramModel(table, unigram_fallback)._probs(tuple(ctx))
    return None if p is None else float(p[w])


def prob_kn(table: NGramTable, discounts: dict, ctx: Sequence[int], w: int) -> float:
    return float(KneserNeyModel(table, discounts)._probs(tuple(ctx))[w])


# -- persistence -----------------------------------------------------------

def model_to_text(model, vocab) -> str:
    table = model.table
    lines = [
        "# nextword n-gram model\n",
        f"# kind {model.kind}\n",
        f"# order {table.order}\n",
        f"# vocab_size {table.vocab_size}\n",
    ]
    if isinstance(model, KneserNeyModel):
        for n in sorted(model.discounts):
            lines.append(f"# discount {n} {model.discounts[n]!r}\n")
    else:
        lines.append(f"# unigram_fallback {int(model.unigram_fallback)}\n")
    for n in range(1, table.order + 1):
        for ngram, c in table.ngrams(n):
            lines.append(f"{n}\t{' '.join(vocab.word(i) for i in ngram)}\t{c}\n")
    return "".join(lines)


def model_from_text(text: str, vocab):
    header, table = {}, None
    discounts = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("# "):
            parts = line[2:].split(" ")
            if parts[0] == "discount":
                discounts[int(parts[1])] = float(parts[2])
            elif len(parts) == 2:
                header[parts[0]] = parts[1]
            continue
        if table is None:
            try:
                table = NGramTable(int(header["order"]), int(header["vocab_size"]))
            except KeyError as exc:
                raise ModelFormatError(f"n-gram model header lacks {exc}")
            if table.vocab_size != len(vocab):
                raise ModelFormatError(
                    f"model vocabulary size {table.vocab_size} != {len(vocab)}"
                )
        parts = line.split("\t")
        if len(parts) != 3:
            raise ModelFormatError(f"line {lineno}: expected 3 tab-separated fields")
        words = parts[1].split(" ")
        if int(parts[0]) != len(words) or any(w not in vocab for w in words):
            raise ModelFormatError(f"line {lineno}: bad n-gram {parts[1]!r}")
        table.add_ngram(vocab.ids(words), int(parts[2]))
    if table is None:
        table = NGramTable(int(header.get("order", MAX_ORDER)), len(vocab))
    table.freeze()
    kind = header.get("kind")
    if kind == "ngram":
        return NGramModel(table, bool(int(header.get("unigram_fallback", "0"))))
    if kind == "ngram-kn":
        return KneserNeyModel(table, discounts)
    raise ModelFormatError(f"unknown n-gram model kind {kind!r}")


def save_model(path, model, vocab):
    atomic_write_text(path, model_to_text(model, vocab))


def load_model(path, vocab):
    with open(path, encoding="utf-8") as fh:
        return model_from_text(fh.read(), vocab)

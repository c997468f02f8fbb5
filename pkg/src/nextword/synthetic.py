"""Synthetic stand-in corpus with a controllable sparsity profile.

A second-order Markov source emits CJK "words" whose
character lengths and sequence lengths follow the marginals reported for a
large mobile-input corpus.  A set of terminal words only ever ends a
training sequence, so a counting model has no followers for them.  In the
validation and test splits some of those words are injected mid-sequence:
every context ending in one is unseen by the counting model, while a
neural model still produces a distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import split_indices
from .io import atomic_write_text

WORD_LENGTH_P = np.array([49.3, 37.2, 10.1, 2.5, 0.6, 0.3])  # 1..5, then 6
SEQ_LENGTH_P = np.array([27.1, 20.3, 14.5, 10.3, 27.4])  # 2..5, then 6..12

CJK_START, CJK_END = 0x4E00, 0x9FA5
ENGLISH = ("ok", "hi", "wifi", "app")


@dataclass
class SyntheticConfig:
    n_sequences: int = 5000
    n_chain: int = 280
    n_terminal: int = 20
    n_classes: int = 20
    branching: int = 3
    terminal_end: float = 0.3
    inject_rate: float = 0.2
    noise_rate: float = 0.01
    collocation: float = 0.5
    seed: int = 0


def surface_forms(n: int, rng) -> list[str]:
    p = WORD_LENGTH_P / WORD_LENGTH_P.sum()
    seen, out = set(), []
    while len(out) < n:
        length = int(rng.choice(6, p=p)) + 1
        w = "".join(chr(c) for c in rng.integers(CJK_START, CJK_END + 1, size=length))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def sequence_length(rng) -> int:
    k = int(rng.choice(5, p=SEQ_LENGTH_P / SEQ_LENGTH_P.sum()))
    return k + 2 if k < 4 else int(rng.integers(6, 13))


class MarkovSource:
    """Trigram source: a fixed follower per word pair, else a class-level draw.

    The pair-specific follower is what exact counting captures well; the
    class structure is what a smooth model can generalise from.
    """

    def __init__(self, cfg: SyntheticConfig, rng):
        self.cfg = cfg
        C = cfg.n_classes
        self.word_class = rng.integers(0, C, size=cfg.n_chain)
        self.members = [np.flatnonzero(self.word_class == c) for c in range(C)]
        # empty classes would stall the chain
        for c in range(C):
            if self.members[c].size == 0:
                self.members[c] = np.array([c % cfg.n_chain])
        self.within = [self._zipf(m.size) for m in self.members]
        # (prev class or C for "start", current class or C) -> few successor classes
        self.succ = rng.integers(0, C, size=(C + 1, C + 1, cfg.branching))
        self.succ_p = rng.dirichlet(np.ones(cfg.branching), size=(C + 1, C + 1))
        # word-pair specific favourite follower (row n_chain = sequence start)
        self.favourite = rng.integers(0, cfg.n_chain, size=(cfg.n_chain + 1, cfg.n_chain + 1))

    @staticmethod
    def _zipf(n):
        p = 1.0 / np.arange(1, n + 1)
        return p / p.sum()

    def next_word(self, a, b, rng) -> int:
        n = self.cfg.n_chain
        if rng.random() < self.cfg.collocation:
            return int(self.favourite[n if a is None else a, n if b is None else b])
        C = self.cfg.n_classes
        ca = C if a is None else self.word_class[a]
        cb = C if b is None else self.word_class[b]
        k = rng.choice(self.cfg.branching, p=self.succ_p[ca, cb])
        cls = self.succ[ca, cb, k]
        return int(self.members[cls][rng.choice(self.members[cls].size, p=self.within[cls])])

    def sequence(self, length, rng) -> list[int]:
        seq, a, b = [], None, None
        for _ in range(length):
            w = self.next_word(a, b, rng)
            seq.append(w)
            a, b = b, w
        return seq


def generate(cfg: SyntheticConfig = SyntheticConfig(), split_seed: int | None = None) -> list[list[str]]:
    """Raw token sequences (before preprocessing).

    ``split_seed`` must equal the seed later used to split the corpus, so
    that injections land in the validation and test parts only.
    """
    rng = np.random.default_rng(cfg.seed)
    words = surface_forms(cfg.n_chain + cfg.n_terminal, rng)
    chain, terminal = words[: cfg.n_chain], words[cfg.n_chain:]
    source = MarkovSource(cfg, rng)
    _, valid, test = split_indices(cfg.n_sequences, cfg.seed if split_seed is None else split_seed)
    held_out = set(valid) | set(test)

    corpus = []
    for i in range(cfg.n_sequences):
        length = sequence_length(rng)
        ends_terminal = rng.random() < cfg.terminal_end
        ids = source.sequence(length - 1 if ends_terminal else length, rng)
        toks = [chain[w] for w in ids]
        if ends_terminal:
            toks.append(terminal[rng.integers(cfg.n_terminal)])
        if i in held_out:
            for pos in range(len(toks) - 1):
                if rng.random() < cfg.inject_rate:
                    toks[pos] = terminal[rng.integers(cfg.n_terminal)]
        toks = _add_noise(toks, cfg.noise_rate, rng)
        corpus.append(toks)
    return corpus


def _add_noise(toks, rate, rng):
    out = []
    for t in toks:
        r = rng.random()
        if r < rate / 2:
            out.append(str(int(rng.integers(0, 10000))))
        elif r < rate:
            out += [t, ENGLISH[int(rng.integers(len(ENGLISH)))]]
        else:
            out.append(t)
    return out


def write_corpus(path, corpus):
    atomic_write_text(path, "".join(" ".join(s) + "\n" for s in corpus))

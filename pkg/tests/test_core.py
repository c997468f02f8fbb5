import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nextword.core import (
    N_RESERVED,
    Distribution,
    LanguageModel,
    next_distribution,
    ranked_ids,
    top_k,
    truth_ranks,
)
from nextword.errors import EmptyDistribution, VocabularyMismatch
from nextword.ngram import NGramModel, count_ngrams


class Uniform(LanguageModel):
    def __init__(self, vocab_size):
        self.vocab_size = vocab_size

    def _probs(self, ctx):
        p = np.zeros(self.vocab_size)
        p[N_RESERVED:] = 1.0 / (self.vocab_size - N_RESERVED)
        return p


def dist(d, size=6):
    p = np.zeros(size)
    for i, v in d.items():
        p[i] = v
    return Distribution(p)


def test_uniform_model():
    d = next_distribution(Uniform(7), [2, 3])
    assert d.support_size == 5
    assert all(d[i] == 0.2 for i in range(2, 7))
    assert d[0] == d[1] == 0.0


def test_vocabulary_mismatch():
    with pytest.raises(VocabularyMismatch):
        next_distribution(Uniform(4), [2, 9])
    with pytest.raises(VocabularyMismatch):
        next_distribution(Uniform(4), [-1])


def test_unsmoothed_unseen_context_abstains(toy):
    _, vocab, ids = toy
    model = NGramModel(count_ngrams(ids, len(vocab), 3))
    assert next_distribution(model, [vocab.id("b")]) is None


def test_mle_bigram_example(toy):
    _, vocab, ids = toy
    model = NGramModel(count_ngrams(ids, len(vocab), 2))
    d = next_distribution(model, [vocab.id("a")])
    assert d.as_dict() == {vocab.id("b"): 2 / 3, vocab.id("c"): 1 / 3}
    assert top_k(d, 2) == [(vocab.id("b"), 2 / 3), (vocab.id("c"), 1 / 3)]


def test_top_k_tie_break():
    # ids: a=2, b=3, c=4
    assert top_k(dist({3: 0.5, 2: 0.5, 4: 0.0}), 1) == [(2, 0.5)]


def test_top_k_short_support():
    assert top_k(dist({5: 1.0}), 10) == [(5, 1.0)]


def test_top_k_empty():
    with pytest.raises(EmptyDistribution):
        top_k(dist({}), 3)


def test_distribution_is_read_only():
    d = dist({2: 1.0})
    with pytest.raises(ValueError):
        d.probs[2] = 0.5


def test_truth_ranks_full_order():
    d = dist({2: 0.5, 3: 0.3, 4: 0.2})
    assert truth_ranks(d, [2, 3, 4, 5]) == [1, 2, 3, 4]
    # zero-mass words follow by id; reserved ids are never ranked
    assert truth_ranks(dist({4: 1.0}), [2, 3, 5]) == [2, 3, 4]


probs = st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0]), min_size=3, max_size=30)


@given(probs, st.integers(1, 30), st.integers(1, 30))
def test_top_k_prefix_and_determinism(vals, k1, k2):
    p = np.array([0.0, 0.0] + vals)
    if p.sum() == 0:
        return
    p /= p.sum()
    k1, k2 = sorted((k1, k2))
    a, b = top_k(p, k1), top_k(p, k2)
    assert a == top_k(p, k1)
    assert b[: len(a)] == a
    scores = [s for _, s in b]
    assert scores == sorted(scores, reverse=True)
    assert len({w for w, _ in b}) == len(b)
    # consistent with the full ordering used for ranks
    order = ranked_ids(p)
    assert [w for w, _ in b] == list(order[:k2])
    assert truth_ranks(p, list(order)) == list(range(1, len(order) + 1))


def test_concurrent_reads(toy):
    _, vocab, ids = toy
    model = NGramModel(count_ngrams(ids, len(vocab), 2))
    expected = top_k(next_distribution(model, [vocab.id("a")]), 3)
    results = []

    def work():
        for _ in range(200):
            results.append(top_k(next_distribution(model, [vocab.id("a")]), 3))

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == expected for r in results)

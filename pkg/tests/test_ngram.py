import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_corpus
from oracles import padded, scan_count, scan_mle
from nextword.core import N_RESERVED, PAD_ID, UNK_ID
from nextword.corpus import build_vocab
from nextword.ngram import (
    KneserNeyModel,
    NGramModel,
    count_ngrams,
    estimate_discounts,
    kn_interpolate,
    load_model,
    model_to_text,
    prob_kn,
    prob_mle,
    save_model,
)


def test_count_example(toy):
    _, vocab, ids = toy
    a, b, c = (vocab.id(x) for x in "abc")
    t = count_ngrams(ids, len(vocab), 2)
    assert (t.count((a, b)), t.count((a, c)), t.count((a,)), t.count((b,)), t.count((c,))) == (2, 1, 3, 2, 1)
    assert t.followers((a,)) == 2 and t.context_count((a,)) == 3
    assert t.counts(2) == {(PAD_ID, a): 3, (a, b): 2, (a, c): 1}


def test_count_single_token():
    t = count_ngrams([[2]], 3, 3)
    assert t.count((2,)) == 1
    assert t.count((PAD_ID, PAD_ID, 2)) == 1


def test_count_empty():
    t = count_ngrams([], 5, 3)
    assert all(t.counts(n) == {} for n in (1, 2, 3))


def test_no_cross_sequence_ngrams():
    t = count_ngrams([[2, 3], [4, 5]], 6, 2)
    assert t.count((3, 4)) == 0


def test_counts_match_scan():
    rng = np.random.default_rng(5)
    seqs = [list(rng.integers(2, 9, size=rng.integers(1, 7))) for _ in range(30)]
    t = count_ngrams(seqs, 9, 3)
    for n in (1, 2, 3):
        for gram, c in t.ngrams(n):
            assert c == scan_count(seqs, 3, gram)
        assert sum(t.counts(n).values()) == sum(len(s) for s in seqs)


def test_prob_mle_examples(toy):
    _, vocab, ids = toy
    a, b = vocab.id("a"), vocab.id("b")
    t = count_ngrams(ids, len(vocab), 2)
    assert prob_mle(t, [a], b) == 2 / 3
    assert prob_mle(t, [a], 5 - 1) == 1 / 3  # c
    assert prob_mle(t, [b], a) is None


def test_prob_mle_unseen_word():
    t = count_ngrams([[2, 3], [2, 3]], 5, 2)
    assert prob_mle(t, [2], 4) == 0.0


def test_mle_matches_brute_force_scan():
    """All (context, word) pairs of a 50-sequence corpus, exact equality."""
    rng = np.random.default_rng(1)
    words = random_corpus(rng, 50, 8, max_len=6)
    vocab = build_vocab(words)
    seqs = [vocab.ids(s) for s in words]
    V = len(vocab)
    table = count_ngrams(seqs, V, 3)
    contexts = [(u,) for u in range(V)] + list(itertools.product(range(V), repeat=2))
    contexts += [tuple(s[:k]) for s in seqs for k in range(3, len(s))]
    checked = 0
    for ctx in contexts:
        for w in range(N_RESERVED, V):
            expected = scan_mle(seqs, 3, V, ctx, w)
            got = prob_mle(table, ctx, w)
            if expected is None:
                assert got is None
            else:
                assert got == float(expected)
                checked += 1
    assert checked > 500


def test_unigram_fallback(toy):
    _, vocab, ids = toy
    t = count_ngrams(ids, len(vocab), 3)
    b = vocab.id("b")
    p = NGramModel(t, unigram_fallback=True).next_distribution([b])
    assert p.as_dict() == {2: 0.5, 3: 2 / 6, 4: 1 / 6}


def test_discount_formula():
    t = count_ngrams([[2, 3, 2, 4, 2, 5, 6, 7, 6, 7]], 8, 2)
    c2 = t.counts(2)
    n1 = sum(v == 1 for v in c2.values())
    n2 = sum(v == 2 for v in c2.values())
    assert estimate_discounts(t)[2] == n1 / (n1 + 2 * n2)
    # n1=1, n2=0 would give d=1: falls back
    t2 = count_ngrams([[2, 3, 2, 3, 2, 3, 2, 3, 2, 3]], 4, 2)
    assert estimate_discounts(t2)[2] == 0.5


def test_discount_example_values():
    t = count_ngrams([[2, 3], [2, 3], [4, 5], [6, 7], [6, 8]], 9, 2)
    # bigrams: (P,2)=2,(2,3)=2,(P,4)=1,(4,5)=1,(P,6)=2,(6,7)=1,(6,8)=1 -> n1=4, n2=3
    assert estimate_discounts(t)[2] == 4 / 10
    empty = count_ngrams([], 4, 3)
    assert estimate_discounts(empty) == {2: 0.5, 3: 0.5}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_discount_bounds(seed):
    rng = np.random.default_rng(seed)
    seqs = [list(rng.integers(2, 7, size=rng.integers(1, 6))) for _ in range(rng.integers(0, 20))]
    for d in estimate_discounts(count_ngrams(seqs, 7, 3)).values():
        assert 0.0 <= d < 1.0


def test_kn_level_hand_example():
    # P(b|a) = (2-0.5)/3 + (0.5*2/3) P'(b) with P'(b) = P'(c) = 1/2
    lower = np.array([0.0, 0.0, 0.0, 0.5, 0.5])
    out = kn_interpolate([3, 4], [2, 1], 0.5, lower)
    assert out[3] == pytest.approx(2 / 3, abs=1e-15)
    assert out[4] == pytest.approx(1 / 3, abs=1e-15)
    assert out.sum() == pytest.approx(1.0, abs=1e-15)


def kn_oracle(seqs, order, V, d, ctx, w):
    """Slow dictionary-based interpolated KN, written independently of the trie."""
    grams = {}
    for s in padded(seqs, order):
        for i in range(order - 1, len(s)):
            for n in range(1, order + 1):
                g = tuple(s[i - n + 1 : i + 1])
                grams[g] = grams.get(g, 0) + 1
    rec = range(N_RESERVED, V)

    def kn_count(g, top):
        if top or g[0] == PAD_ID:
            return grams.get(g, 0)
        return len({h[0] for h in grams if len(h) == len(g) + 1 and h[1:] == g})

    def p(c, w):
        if len(c) == 0:
            cnt = {v: kn_count((v,), False) for v in rec}
            tot = sum(cnt.values())
            if tot == 0:
                return 1 / len(rec)
            t = sum(1 for x in cnt.values() if x)
            return max(cnt[w] - d[2], 0) / tot + d[2] * t / tot / len(rec)
        top = len(c) == order - 1
        cnt = {v: kn_count(c + (v,), top) for v in rec}
        tot = sum(cnt.values())
        lower = p(c[1:], w)
        if tot == 0:
            return lower
        n = len(c) + 1
        t = sum(1 for x in cnt.values() if x)
        return max(cnt[w] - d[n], 0) / tot + d[n] * t / tot * lower

    hist = tuple(([PAD_ID] * (order - 1) + list(ctx))[-(order - 1):])
    return p(hist, w)


def test_kn_matches_oracle():
    rng = np.random.default_rng(3)
    seqs = [list(rng.integers(1, 9, size=rng.integers(1, 6))) for _ in range(25)]
    V = 9
    for order in (2, 3):
        t = count_ngrams(seqs, V, order)
        model = KneserNeyModel(t)
        for ctx in [(2,), (3, 4), (1,), (8, 8), (5, 1, 2)] + [tuple(s[:2]) for s in seqs if len(s) > 2]:
            p = model.next_distribution(ctx).probs
            for w in range(N_RESERVED, V):
                assert p[w] == pytest.approx(kn_oracle(seqs, order, V, model.discounts, ctx, w), abs=1e-13)


def test_kn_normalized_and_positive():
    rng = np.random.default_rng(4)
    words = random_corpus(rng, 120, 30)
    vocab = build_vocab(words)
    t = count_ngrams([vocab.ids(s) for s in words], len(vocab), 3)
    model = KneserNeyModel(t)
    for _ in range(300):
        ctx = tuple(rng.integers(0, len(vocab), size=rng.integers(1, 4)))
        p = model.next_distribution(ctx).probs
        assert abs(p.sum() - 1.0) <= 1e-9
        assert np.all(p[N_RESERVED:] > 0) and np.all(p[:N_RESERVED] == 0)


def test_kn_full_backoff_equals_unigram_level(toy):
    _, vocab, ids = toy
    t = count_ngrams(ids, len(vocab), 3)
    model = KneserNeyModel(t)
    unseen = model.next_distribution([UNK_ID, UNK_ID]).probs
    np.testing.assert_array_equal(unseen, model._base)
    # continuation unigram: a preceded by <s>, b and c by a -> 1/3 each, then floor
    d = model.discounts[2]
    np.testing.assert_allclose(unseen[2:], [(1 - d) / 3 + d / 3] * 3)


def test_kn_converges_to_mle_as_discount_vanishes():
    rng = np.random.default_rng(8)
    seqs = [list(rng.integers(2, 8, size=rng.integers(2, 6))) for _ in range(40)]
    t = count_ngrams(seqs, 8, 3)
    mle = NGramModel(t)
    ctxs = [tuple(s[:k]) for s in seqs for k in range(1, len(s))]
    gaps = []
    for eps in (1e-1, 1e-3, 1e-6):
        kn = KneserNeyModel(t, {2: eps, 3: eps})
        gap = 0.0
        for ctx in ctxs:
            hist = t.history(ctx)
            if t.context_count(hist) == 0:
                continue
            pm, pk = mle.next_distribution(ctx).probs, kn.next_distribution(ctx).probs
            seen = pm > 0
            gap = max(gap, np.abs(pm[seen] - pk[seen]).max())
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-5


def test_prob_kn_function(toy):
    _, vocab, ids = toy
    t = count_ngrams(ids, len(vocab), 2)
    d = {2: 0.5}
    total = sum(prob_kn(t, d, [vocab.id("a")], w) for w in range(2, len(vocab)))
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["ngram", "ngram-kn"])
def test_model_file_round_trip(tmp_path, kind):
    rng = np.random.default_rng(2)
    words = random_corpus(rng, 40, 10)
    vocab = build_vocab(words)
    t = count_ngrams([vocab.ids(s) for s in words], len(vocab), 3)
    model = NGramModel(t, unigram_fallback=True) if kind == "ngram" else KneserNeyModel(t)
    save_model(tmp_path / "m.txt", model, vocab)
    text = (tmp_path / "m.txt").read_text(encoding="utf-8")
    loaded = load_model(tmp_path / "m.txt", vocab)
    assert model_to_text(loaded, vocab) == text
    assert type(loaded) is type(model)
    for s in words[:10]:
        ctx = vocab.ids(s)
        a, b = model.next_distribution(ctx), loaded.next_distribution(ctx)
        np.testing.assert_array_equal(a.probs, b.probs)
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    keys = [(int(l.split("\t")[0]), vocab.ids(l.split("\t")[1].split(" "))) for l in lines]
    assert keys == sorted(keys)

import numpy as np

from nextword.corpus import build_vocab, make_queries, preprocess, split
from nextword.eval import sparsity_rate
from nextword.ngram import NGramModel, count_ngrams
from nextword.synthetic import (
    SEQ_LENGTH_P,
    WORD_LENGTH_P,
    SyntheticConfig,
    generate,
    sequence_length,
    surface_forms,
)


def test_deterministic():
    cfg = SyntheticConfig(n_sequences=300, seed=2)
    assert generate(cfg) == generate(cfg)
    assert generate(cfg) != generate(SyntheticConfig(n_sequences=300, seed=3))


def test_marginals_follow_targets():
    rng = np.random.default_rng(0)
    words = surface_forms(4000, rng)
    assert len(set(words)) == 4000
    lengths = np.bincount([min(len(w), 6) for w in words], minlength=7)[1:] / 4000
    assert np.allclose(lengths, WORD_LENGTH_P / 100, atol=0.03)
    seq = np.array([sequence_length(rng) for _ in range(20000)])
    assert seq.min() == 2 and seq.max() <= 12
    share = [np.mean(seq == k) for k in (2, 3, 4, 5)] + [np.mean(seq > 5)]
    assert np.allclose(share, SEQ_LENGTH_P / 100, atol=0.02)


def test_injection_only_in_held_out_parts():
    cfg = SyntheticConfig(n_sequences=1000, seed=5, noise_rate=0.0)
    tr, va, te = split(generate(cfg), 5)
    terminal = set(build_vocab(tr).words) - {w for s in tr for w in s[:-1]}
    assert terminal
    # in training, terminal words never have a follower
    assert all(w not in terminal for s in tr for w in s[:-1])
    inner = [w for s in va + te for w in s[:-1]]
    assert np.mean([w in terminal for w in inner]) > 0.1


def test_unsmoothed_trigram_abstains_in_every_bucket():
    corpus = [preprocess(s) for s in generate(SyntheticConfig(n_sequences=2000, seed=1))]
    tr, _, te = split(corpus, 1)
    vocab = build_vocab(tr)
    model = NGramModel(count_ngrams([vocab.ids(s) for s in tr], len(vocab), 3))
    stats = sparsity_rate(model, make_queries(te, vocab))
    assert all(r > 0.05 for r in stats.count_rates().values())


def test_noise_tokens_are_preprocessed_away():
    corpus = generate(SyntheticConfig(n_sequences=500, seed=0, noise_rate=0.2))
    flat = [t for s in corpus for t in s]
    assert any(t.isdigit() for t in flat) and any(t.isascii() and t.isalpha() for t in flat)
    clean = [t for s in corpus for t in preprocess(s)]
    assert "NUM" in clean and not any(t.isascii() and t.isalpha() and t != "NUM" for t in clean)

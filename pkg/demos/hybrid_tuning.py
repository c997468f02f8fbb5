"""Mix a counting model with a neural one and tune the weight.

The counting model is sharp on contexts it has seen and silent on the rest;
the neural model always answers.  The grid search over the mixture weight
scores every point on validation queries and keeps the best.
"""

from nextword.corpus import build_vocab, make_queries, preprocess, split
from nextword.hybrid import InterpolatedModel, tune_lambda
from nextword.neural import TrainConfig, train
from nextword.ngram import NGramModel, count_ngrams
from nextword import eval as ev
from nextword.synthetic import SyntheticConfig, generate

corpus = [preprocess(s) for s in generate(SyntheticConfig(n_sequences=1500, seed=2), split_seed=2)]
# the same seed as generation, so held-out injections land in valid/test
train_part, valid_part, _ = split(corpus, 2)
vocab = build_vocab(train_part)
ids = [vocab.ids(s) for s in train_part]

counts = NGramModel(count_ngrams(ids, len(vocab), 3))
nlm = train("nlm", ids, vocab, {"context": 4, "dim": 16, "hidden": 32}, TrainConfig(epochs=3, seed=0))
valid = make_queries(valid_part, vocab)

res = tune_lambda([counts, nlm], valid, objective="MAP", step=0.1)
print(res.to_tsv(), end="")
print(f"\nbest lambda {res.lams[0]:.1f}, validation MAP {float(res.score):.4f}")

rows = {
    "ngram": ev.evaluate(counts, valid),
    "nlm": ev.evaluate(nlm, valid),
    "nlm+ngram": ev.evaluate(InterpolatedModel([counts, nlm], res.lams), valid),
}
print()
print(ev.metrics_table(rows), end="")

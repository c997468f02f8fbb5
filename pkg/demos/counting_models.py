"""Counting models on a tiny corpus.

Three sequences, "a b", "a c", "a b": after "a" the raw counts give b
two thirds of the mass and c one third, and a context never seen in
training gets no recommendation at all.  Kneser-Ney smoothing spreads some
mass to every word instead.
"""

from nextword import top_k
from nextword.corpus import build_vocab
from nextword.ngram import KneserNeyModel, NGramModel, count_ngrams

corpus = [["a", "b"], ["a", "c"], ["a", "b"]]
vocab = build_vocab(corpus)
table = count_ngrams([vocab.ids(s) for s in corpus], len(vocab), order=3)

mle = NGramModel(table)
kn = KneserNeyModel(table)


def show(model, words):
    d = model.next_distribution(vocab.ids(words))
    if d is None:
        return "(no recommendation)"
    return ", ".join(f"{vocab.word(w)}={p:.3f}" for w, p in top_k(d, 5))


for ctx in (["a"], ["b"], ["c", "b"]):
    print(f"{' '.join(ctx):>4}  mle: {show(mle, ctx)}")
    print(f"{'':>4}   kn: {show(kn, ctx)}")

# Every smoothed row is a proper distribution over the recommendable words.
print("discounts:", kn.discounts)
print("sum after 'a':", kn.next_distribution(vocab.ids(["a"])).probs.sum())

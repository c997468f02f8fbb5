"""Train the four neural families briefly on a synthetic corpus.

The gradient of each model is first checked against central finite
differences on a toy shape, then every family is trained for a couple of
epochs and asked for its next-word guesses.
"""

import numpy as np

from nextword import top_k
from nextword.corpus import build_vocab, preprocess
from nextword.neural import CBOW, LSTM, NLM, RNN, TrainConfig, grad_check, train
from nextword.synthetic import SyntheticConfig, generate

rng = np.random.default_rng(0)
toys = {
    "nlm": (NLM.init(12, rng, 0.3, context=3, dim=4, hidden=3), [((2, 3, 4), 5), ((0, 0, 7), 9)]),
    "cbow": (CBOW.init(12, rng, 0.3, window=3, dim=4, negatives=2, weighted=True), [((2, 3, 4), 5, [6, 7])]),
    "rnn": (RNN.init(8, rng, 0.3, dim=4), [(2, 3, 4, 5)]),
    "lstm": (LSTM.init(8, rng, 0.3, dim=4), [(2, 3, 4, 5, 6)]),
}
for name, (model, batch) in toys.items():
    print(f"{name:5s} max relative gradient error {grad_check(model, batch, weight_decay=1e-3, eps=1e-4):.2e}")

corpus = [preprocess(s) for s in generate(SyntheticConfig(n_sequences=800, seed=3))]
vocab = build_vocab(corpus[:700])
ids = [vocab.ids(s) for s in corpus[:700]]
probe = corpus[700][:2]

settings = {
    "nlm": ({"context": 3, "dim": 16, "hidden": 32}, 0.05),
    "cbow": ({"window": 3, "dim": 16, "negatives": 3, "weighted": True}, 0.05),
    "rnn": ({"dim": 16}, 0.1),
    "lstm": ({"dim": 16, "hidden": 16}, 0.1),
}
print("\nprobe context:", " ".join(probe))
for kind, (hyper, lr) in settings.items():
    model = train(kind, ids, vocab, hyper, TrainConfig(epochs=2, lr=lr, seed=1))
    losses = " -> ".join(f"{x:.3f}" for x in model.meta["epoch_losses"])
    guesses = " ".join(vocab.word(w) for w, _ in top_k(model.next_distribution(vocab.ids(probe)), 5))
    print(f"{kind:5s} loss {losses}   top-5: {guesses}")

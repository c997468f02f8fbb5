import numpy as np

from ..core import N_RESERVED, softmax_masked
from .base import NeuralModel, sigmoid, targets_ok

NOISE_POWER = 0.75


def position_weights(L: int, reverse: bool = False) -> np.ndarray:
    """Context weights by distance ``k = 1..L`` from the predicted word.

    ``2k / (L (L + 1))``: the farthest word weighs most.  ``reverse`` mirrors
    the profile so the nearest word weighs most.
    """
    k = np.arange(1, L + 1, dtype=np.float64)
    if reverse:
        k = k[::-1]
    return 2.0 * k / (L * (L + 1))


def noise_distribution(freqs) -> np.ndarray:
    """Unigram frequency to the 3/4 power over recommendable words."""
    f = np.asarray(freqs, dtype=np.float64).copy()
    f[:N_RESERVED] = 0.0
    f = np.where(f > 0, f, 0.0) ** NOISE_POWER
    if f.sum() == 0:
        f[N_RESERVED:] = 1.0
    return f / f.sum()


class CBOW(NeuralModel):
    """Left-context CBOW trained with negative sampling.

    The context vector ``u`` averages the input vectors of the last
    ``window`` words (only those present).  With ``weighted`` the average is
    replaced by the distance weighting of :func:`position_weights`,
    renormalised over the positions actually present.  Scoring for
    recommendation is a full softmax over ``C_out @ u``.
    """

    kind = "cbow"
    decayed = ("C_in", "C_out")

    def __init__(self, vocab_size, params, unk_trained=False, **hyper):
        super().__init__(vocab_size, params, unk_trained=unk_trained, **hyper)
        self.noise = None

    @classmethod
    def shapes(cls, vocab_size, window, dim, negatives, weighted=False, reverse=False):
        if negatives < 1:
            raise ValueError("need at least one negative sample")
        return {"C_in": (vocab_size, dim), "C_out": (vocab_size, dim)}

    def weights(self, m):
        """Weights for the ``m`` present context words, oldest first."""
        L = self.hyper["window"]
        if not self.hyper.get("weighted"):
            return np.full(m, 1.0 / m)
        if self.hyper.get("reverse"):
            k = np.arange(L, L - m, -1, dtype=np.float64)  # nearest gets L
        else:
            k = np.arange(1, m + 1, dtype=np.float64)
        return (k / k.sum())[::-1]

    def context_vector(self, ctx):
        ctx = list(ctx)[-self.hyper["window"]:]
        return self.weights(len(ctx)) @ self.params["C_in"][ctx]

    def forward(self, ctx):
        return softmax_masked(self.params["C_out"] @ self.context_vector(ctx))

    def loss_and_grad(self, batch, weight_decay=0.0):
        """Negative-sampling loss over ``(context, target, negatives)`` triples.

        Per example: ``-log s(v_t . u) - sum_n log s(-v_n . u)``.  Negatives
        equal to the target are ignored.
        """
        p = self.params
        g = self.zero_grads()
        loss = 0.0
        for ctx, target, negs in batch:
            ctx = list(ctx)[-self.hyper["window"]:]
            w = self.weights(len(ctx))
            u = w @ p["C_in"][ctx]
            negs = [n for n in negs if n != target]
            words = [target] + negs
            sign = np.array([1.0] + [-1.0] * len(negs))
            vecs = p["C_out"][words]
            s = sigmoid(sign * (vecs @ u))
            loss -= float(np.sum(np.log(s)))
            coef = -sign * (1.0 - s)  # d loss / d (v . u)
            np.add.at(g["C_out"], words, np.outer(coef, u))
            du = coef @ vecs
            np.add.at(g["C_in"], ctx, np.outer(w, du))
        m = len(batch)
        for v in g.values():
            v /= m
        loss /= m
        return loss + self.penalty(weight_decay, g), g

    def examples(self, sequences):
        L = self.hyper["window"]
        return [
            (tuple(seq[max(0, t - L):t]), seq[t])
            for seq in sequences
            for t in range(1, len(seq))
            if targets_ok(seq[t])
        ]

    def prepare(self, example, rng):
        ctx, target = example
        negs = rng.choice(self.vocab_size, size=self.hyper["negatives"], p=self.noise)
        return ctx, target, [int(n) for n in negs]

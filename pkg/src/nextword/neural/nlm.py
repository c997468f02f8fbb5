import numpy as np

from ..core import PAD_ID, softmax_masked
from .base import NeuralModel, targets_ok


class NLM(NeuralModel):
    """Feedforward neural LM: ``y = b + W x + U tanh(b_h + H x)``.

    ``x`` concatenates the embeddings of the last ``context`` words, oldest
    first, left-padded with the pad id.
    """

    kind = "nlm"
    decayed = ("C", "H", "U", "W")

    @classmethod
    def shapes(cls, vocab_size, context, dim, hidden):
        width = context * dim
        return {
            "C": (vocab_size, dim),
            "H": (hidden, width),
            "b_h": (hidden,),
            "U": (vocab_size, hidden),
            "W": (vocab_size, width),
            "b": (vocab_size,),
        }

    def window(self, ctx):
        n = self.hyper["context"]
        ctx = tuple(ctx)[-n:]
        return (PAD_ID,) * (n - len(ctx)) + ctx

    def logits(self, ctx):
        p = self.params
        x = p["C"][list(self.window(ctx))].reshape(-1)
        return p["b"] + p["W"] @ x + p["U"] @ np.tanh(p["b_h"] + p["H"] @ x)

    def forward(self, ctx):
        return softmax_masked(self.logits(ctx))

    def loss_and_grad(self, batch, weight_decay=0.0):
        """Mean negative log-likelihood over ``(context, target)`` pairs plus L2."""
        p = self.params
        g = self.zero_grads()
        n, d = self.hyper["context"], self.hyper["dim"]
        loss = 0.0
        for ctx, target in batch:
            idx = list(self.window(ctx))
            x = p["C"][idx].reshape(-1)
            z = np.tanh(p["b_h"] + p["H"] @ x)
            probs = softmax_masked(p["b"] + p["W"] @ x + p["U"] @ z)
            loss -= np.log(probs[target])
            dy = probs
            dy[target] -= 1.0
            g["b"] += dy
            g["W"] += np.outer(dy, x)
            g["U"] += np.outer(dy, z)
            da = (p["U"].T @ dy) * (1.0 - z * z)
            g["b_h"] += da
            g["H"] += np.outer(da, x)
            dx = (p["W"].T @ dy + p["H"].T @ da).reshape(n, d)
            np.add.at(g["C"], idx, dx)
        m = len(batch)
        for v in g.values():
            v /= m
        loss /= m
        return loss + self.penalty(weight_decay, g), g

    def examples(self, sequences):
        return [
            (self.window(seq[:t]), seq[t])
            for seq in sequences
            for t in range(1, len(seq))
            if targets_ok(seq[t])
        ]

import numpy as np

from ..core import softmax_masked
from .base import NeuralModel, sigmoid, targets_ok


class RNN(NeuralModel):
    """Elman-style recurrent LM with additive input.

    ``x = C[w] + h_prev``, ``h = sigmoid(H_R x)``, ``y = O_R h``.  The sum
    forces the hidden size to equal the embedding size ``dim``.
    """

    kind = "rnn"
    decayed = ("C", "H_R", "O_R")
    clipped = True
    recurrent = True

    @classmethod
    def shapes(cls, vocab_size, dim):
        return {"C": (vocab_size, dim), "H_R": (dim, dim), "O_R": (vocab_size, dim)}

    def step(self, w, h_prev):
        p = self.params
        h = sigmoid(p["H_R"] @ (p["C"][w] + h_prev))
        return h, softmax_masked(p["O_R"] @ h)

    def initial_state(self):
        return np.zeros(self.hyper["dim"])

    def forward(self, ctx):
        h = self.initial_state()
        for w in ctx:
            h, probs = self.step(w, h)
        return probs

    def prefix_distributions(self, seq):
        """Distribution after each prefix ``seq[:1], seq[:2], ...``."""
        h, out = self.initial_state(), []
        for w in seq:
            h, probs = self.step(w, h)
            out.append(probs)
        return out

    def loss_and_grad(self, batch, weight_decay=0.0, bptt=None):
        """Summed next-word NLL per sequence, averaged over the batch.

        Backpropagation is cut every ``bptt`` steps (no cut when ``None``).
        """
        p = self.params
        g = self.zero_grads()
        loss = 0.0
        for seq in batch:
            steps = len(seq) - 1
            xs, hs, ps = [], [], []
            h = self.initial_state()
            for t in range(steps):
                x = p["C"][seq[t]] + h
                h = sigmoid(p["H_R"] @ x)
                xs.append(x)
                hs.append(h)
                ps.append(softmax_masked(p["O_R"] @ h))
            dh_next = np.zeros_like(h)
            for t in reversed(range(steps)):
                if bptt and (t + 1) % bptt == 0:
                    dh_next = np.zeros_like(h)
                dh = dh_next
                target = seq[t + 1]
                if targets_ok(target):
                    loss -= np.log(ps[t][target])
                    dy = ps[t]
                    dy[target] -= 1.0
                    g["O_R"] += np.outer(dy, hs[t])
                    dh = dh + p["O_R"].T @ dy
                da = dh * hs[t] * (1.0 - hs[t])
                g["H_R"] += np.outer(da, xs[t])
                dx = p["H_R"].T @ da
                g["C"][seq[t]] += dx
                dh_next = dx
        m = len(batch)
        for v in g.values():
            v /= m
        loss /= m
        return loss + self.penalty(weight_decay, g), g

    def examples(self, sequences):
        return [tuple(s) for s in sequences if len(s) > 1 and any(targets_ok(w) for w in s[1:])]

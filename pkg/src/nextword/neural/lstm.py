import numpy as np

from ..core import softmax_masked
from .base import NeuralModel, sigmoid, targets_ok

GATES = ("i", "f", "c", "o")
FORGET_BIAS = 1.0


class LSTM(NeuralModel):
    """LSTM language model; the output layer is ``W_y h + b_y``."""

    kind = "lstm"
    decayed = tuple(f"W_{s}{g}" for g in GATES for s in "xh") + ("C", "W_y")
    clipped = True
    recurrent = True

    @classmethod
    def shapes(cls, vocab_size, dim, hidden=None):
        hidden = hidden or dim
        shapes = {"C": (vocab_size, dim), "W_y": (vocab_size, hidden), "b_y": (vocab_size,)}
        for gate in GATES:
            shapes[f"W_x{gate}"] = (hidden, dim)
            shapes[f"W_h{gate}"] = (hidden, hidden)
            shapes[f"b_{gate}"] = (hidden,)
        return shapes

    @classmethod
    def init(cls, vocab_size, rng, scale, unk_trained=False, **hyper):
        model = super().init(vocab_size, rng, scale, unk_trained=unk_trained, **hyper)
        model.params["b_f"][:] = FORGET_BIAS
        return model

    @property
    def hidden(self):
        return self.hyper.get("hidden") or self.hyper["dim"]

    def initial_state(self):
        return np.zeros(self.hidden), np.zeros(self.hidden)

    def _cell(self, w, h_prev, c_prev):
        p = self.params
        z = p["C"][w]

        def pre(gate):
            return p[f"W_x{gate}"] @ z + p[f"W_h{gate}"] @ h_prev + p[f"b_{gate}"]

        i, f, o = sigmoid(pre("i")), sigmoid(pre("f")), sigmoid(pre("o"))
        cand = np.tanh(pre("c"))
        c = f * c_prev + i * cand
        tc = np.tanh(c)
        h = o * tc
        return z, i, f, o, cand, c, tc, h

    def step(self, w, state):
        """One time step from ``state = (h_prev, c_prev)``."""
        *_, c, _, h = self._cell(w, *state)
        return (h, c), softmax_masked(self.params["W_y"] @ h + self.params["b_y"])

    def forward(self, ctx):
        state = self.initial_state()
        for w in ctx:
            state, probs = self.step(w, state)
        return probs

    def prefix_distributions(self, seq):
        state, out = self.initial_state(), []
        for w in seq:
            state, probs = self.step(w, state)
            out.append(probs)
        return out

    def loss_and_grad(self, batch, weight_decay=0.0, bptt=None):
        """Summed next-word NLL per sequence, averaged over the batch."""
        p = self.params
        g = self.zero_grads()
        loss = 0.0
        for seq in batch:
            steps = len(seq) - 1
            cache, ps = [], []
            h, c = self.initial_state()
            for t in range(steps):
                h_prev, c_prev = h, c
                z, i, f, o, cand, c, tc, h = self._cell(seq[t], h_prev, c_prev)
                cache.append((z, i, f, o, cand, c_prev, tc, h_prev, h))
                ps.append(softmax_masked(p["W_y"] @ h + p["b_y"]))
            dh_next = np.zeros(self.hidden)
            dc_next = np.zeros(self.hidden)
            for t in reversed(range(steps)):
                if bptt and (t + 1) % bptt == 0:
                    dh_next = np.zeros(self.hidden)
                    dc_next = np.zeros(self.hidden)
                z, i, f, o, cand, c_prev, tc, h_prev, h = cache[t]
                dh = dh_next
                target = seq[t + 1]
                if targets_ok(target):
                    loss -= np.log(ps[t][target])
                    dy = ps[t]
                    dy[target] -= 1.0
                    g["W_y"] += np.outer(dy, h)
                    g["b_y"] += dy
                    dh = dh + p["W_y"].T @ dy
                dc = dc_next + dh * o * (1.0 - tc * tc)
                da = {
                    "i": dc * cand * i * (1.0 - i),
                    "f": dc * c_prev * f * (1.0 - f),
                    "c": dc * i * (1.0 - cand * cand),
                    "o": dh * tc * o * (1.0 - o),
                }
                dz = np.zeros_like(z)
                dh_next = np.zeros(self.hidden)
                for gate, d in da.items():
                    g[f"W_x{gate}"] += np.outer(d, z)
                    g[f"W_h{gate}"] += np.outer(d, h_prev)
                    g[f"b_{gate}"] += d
                    dz += p[f"W_x{gate}"].T @ d
                    dh_next += p[f"W_h{gate}"].T @ d
                g["C"][seq[t]] += dz
                dc_next = dc * f
        m = len(batch)
        for v in g.values():
            v /= m
        loss /= m
        return loss + self.penalty(weight_decay, g), g

    def examples(self, sequences):
        return [tuple(s) for s in sequences if len(s) > 1 and any(targets_ok(w) for w in s[1:])]

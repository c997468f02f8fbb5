"""Ranking metrics on a hand-made query.

One query has context "a" and two observed next words, x and y.  The model
ranks x first, z second and y third, so at K=3 both truths are shown.
"""

from fractions import Fraction

import numpy as np

from nextword import eval as ev
from nextword.core import Distribution
from nextword.corpus import EvalQuery

X, Y, Z = 2, 3, 4


class Fixed:
    vocab_size = 7

    def next_distribution(self, ctx):
        p = np.zeros(7)
        p[[X, Z, Y]] = [0.5, 0.3, 0.2]
        return Distribution(p)


queries = [EvalQuery(("a",), (X,), ((X, 1), (Y, 1)))]
model = Fixed()
lenc = [1, 1, 2, 3, 1, 1, 1]  # x has two characters, y three

t = ev.tally(queries, ev.score_queries(model, queries, 3), (1, 3), lenc)
print("P@3 =", ev.precision(t, 3))              # 2 hits out of 3 slots
print("R@1 =", ev.recall(t, 1), " R@3 =", ev.recall(t, 3))
print("MAP =", ev.mean_average_precision(t))    # (1/1 + 1/3) / 2
print("SC@1 =", ev.saved_chars(t, 1))           # 2 of 5 characters
print("F1@3 =", ev.f1_at_k(ev.precision(t, 3), ev.recall(t, 3)), "with beta", ev.BETA)

rep = ev.evaluate(model, queries, lenc)
print()
print(ev.metrics_table({"fixed": rep}), end="")
assert ev.mean_average_precision(t) == Fraction(2, 3)

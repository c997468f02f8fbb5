"""Ranking metrics and the sparsity / overlap analyses.

Scoring a query set first reduces every query to integer tallies (hits at
each cut-off, a histogram of truth ranks, character counts).  Metrics are
ratios of those tallies, computed exactly as ``Fraction`` and converted to
float at the end, so the result does not depend on query order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import LanguageModel, top_k, truth_ranks
from .errors import NoComparableQueries, NoUsableQueries

PRECISION_KS = (1, 3, 5, 10)
REPORT_K = 10
BETA = Fraction(2, 3)

COUNT_BUCKETS = (1, 2, 3, 4, 5)
LENGTH_BUCKETS = ((1, 2), (2, 3), (3, 4), (4, 5), (5, None))


@dataclass(frozen=True)
class QueryResult:
    """Outcome of one query: ``top`` ids (best first) and truth ranks.

    ``ranks`` holds ``(word_id, multiplicity, rank)``; ``top`` and ``ranks``
    are ``None`` when the model abstained.
    """

    top: Optional[tuple]
    ranks: Optional[tuple]

    @property
    def no_rec(self) -> bool:
        return self.top is None


def score_probs(probs, query, k_max: int = REPORT_K) -> QueryResult:
    if probs is None:
        return QueryResult(None, None)
    top = tuple(w for w, _ in top_k(probs, k_max))
    ids = [w for w, _ in query.truths]
    ranks = truth_ranks(probs, ids)
    return QueryResult(top, tuple((w, m, r) for (w, m), r in zip(query.truths, ranks)))


def score_queries(model: LanguageModel, queries, k_max: int = REPORT_K) -> list[QueryResult]:
    out = []
    for q in queries:
        d = model.next_distribution(q.context)
        out.append(score_probs(None if d is None else d.probs, q, k_max))
    return out


@dataclass
class Tally:
    queries: int = 0
    no_rec: int = 0
    U: int = 0
    chars: int = 0
    hits: Counter = field(default_factory=Counter)  # K -> truth instances in top K
    hit_chars: Counter = field(default_factory=Counter)  # K -> characters saved
    rank_hist: Counter = field(default_factory=Counter)  # rank -> truth instances

    def add(self, query, result: QueryResult, ks: Sequence[int], lenc):
        self.queries += 1
        self.U += query.U
        self.chars += sum(m * lenc[w] for w, m in query.truths)
        if result.no_rec:
            self.no_rec += 1
            return
        for w, m, r in result.ranks:
            self.rank_hist[r] += m
        for k in ks:
            shown = set(result.top[:k])
            for w, m, _ in result.ranks:
                if w in shown:
                    self.hits[k] += m
                    self.hit_chars[k] += m * lenc[w]


def tally(queries, results, ks=PRECISION_KS, lenc=None) -> Tally:
    t = Tally()
    if lenc is None:
        lenc = _OnesLength()
    for q, r in zip(queries, results, strict=True):
        t.add(q, r, ks, lenc)
    return t


class _OnesLength:
    def __getitem__(self, _):
        return 1


# -- metric definitions over tallies ------------------------------------------

def precision(t: Tally, k: int) -> Fraction:
    usable = t.queries - t.no_rec
    if usable == 0:
        raise NoUsableQueries("every query received no recommendation")
    return Fraction(t.hits[k], k * usable)


def recall(t: Tally, k: int) -> Fraction:
    return Fraction(t.hits[k], t.U) if t.U else Fraction(0)


def saved_words(t: Tally, k: int) -> Fraction:
    return Fraction(t.hits[k], t.U) if t.U else Fraction(0)


def saved_chars(t: Tally, k: int) -> Fraction:
    return Fraction(t.hit_chars[k], t.chars) if t.chars else Fraction(0)


def mean_average_precision(t: Tally) -> Fraction:
    if not t.U:
        return Fraction(0)
    return sum((Fraction(m, r) for r, m in sorted(t.rank_hist.items())), Fraction(0)) / t.U


def f1_at_k(p, r, beta=BETA):
    """``P R / (beta P + (1 - beta) R)``; zero when both are zero."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if p == 0 and r == 0:
        return p * 0
    return p * r / (beta * p + (1 - beta) * r)


# -- model-level entry points --------------------------------------------------

def _tally_for(queries, model, ks, lenc=None):
    return tally(queries, score_queries(model, queries, max(ks)), ks, lenc)


def precision_at_k(queries, model, k: int) -> float:
    return float(precision(_tally_for(queries, model, (k,)), k))


def recall_at_k(queries, model, k: int) -> float:
    return float(recall(_tally_for(queries, model, (k,)), k))


def map_score(queries, model) -> float:
    return float(mean_average_precision(_tally_for(queries, model, (1,))))


def saved_words_chars(queries, model, k: int, lenc) -> tuple[float, float]:
    t = _tally_for(queries, model, (k,), lenc)
    return float(saved_words(t, k)), float(saved_chars(t, k))


@dataclass(frozen=True)
class MetricsReport:
    p1: float
    p3: float
    p5: float
    p10: float
    r10: float
    f1: float
    map: float
    sw10: float
    sc10: float
    queries: int
    no_rec: int

    COLUMNS = ("P@1", "P@3", "P@5", "P@10", "R@10", "F1", "MAP", "SW@10", "SC@10")

    def values(self):
        return (self.p1, self.p3, self.p5, self.p10, self.r10, self.f1, self.map, self.sw10, self.sc10)


def report_from_tally(t: Tally, beta=BETA, exact=False) -> MetricsReport:
    conv = (lambda x: x) if exact else float
    p = {k: precision(t, k) for k in PRECISION_KS}
    r10 = recall(t, REPORT_K)
    return MetricsReport(
        p1=conv(p[1]),
        p3=conv(p[3]),
        p5=conv(p[5]),
        p10=conv(p[10]),
        r10=conv(r10),
        f1=conv(f1_at_k(p[REPORT_K], r10, beta)),
        map=conv(mean_average_precision(t)),
        sw10=conv(saved_words(t, REPORT_K)),
        sc10=conv(saved_chars(t, REPORT_K)),
        queries=t.queries,
        no_rec=t.no_rec,
    )


def evaluate(model, queries, lenc=None, beta=BETA, exact=False) -> MetricsReport:
    """All headline metrics for ``model`` on aggregated ``queries``."""
    return report_from_results(queries, score_queries(model, queries), lenc, beta, exact)


def report_from_results(queries, results, lenc=None, beta=BETA, exact=False) -> MetricsReport:
    return report_from_tally(tally(queries, results, PRECISION_KS, lenc), beta, exact)


# -- analyses ----------------------------------------------------------------

@dataclass
class SparsityStats:
    """No-recommendation counts per context-size and mean-word-length bucket."""

    by_count: dict  # n_words -> (no_rec, total)
    by_length: dict  # (lo, hi) -> (no_rec, total)

    @staticmethod
    def _rate(pair):
        no_rec, total = pair
        return no_rec / total if total else float("nan")

    def count_rates(self) -> dict:
        return {k: self._rate(v) for k, v in self.by_count.items()}

    def length_rates(self) -> dict:
        return {k: self._rate(v) for k, v in self.by_length.items()}


def length_bucket(tokens) -> tuple:
    avg = sum(len(t) for t in tokens) / len(tokens)
    for lo, hi in LENGTH_BUCKETS:
        if avg >= lo and (hi is None or avg < hi):
            return (lo, hi)
    return LENGTH_BUCKETS[0]


def sparsity_from_results(queries, results) -> SparsityStats:
    by_count = {k: [0, 0] for k in COUNT_BUCKETS}
    by_length = {b: [0, 0] for b in LENGTH_BUCKETS}
    for q, r in zip(queries, results, strict=True):
        n = len(q.tokens)
        if n in by_count:
            by_count[n][0] += r.no_rec
            by_count[n][1] += 1
        cell = by_length[length_bucket(q.tokens)]
        cell[0] += r.no_rec
        cell[1] += 1
    return SparsityStats({k: tuple(v) for k, v in by_count.items()}, {k: tuple(v) for k, v in by_length.items()})


def sparsity_rate(model, queries) -> SparsityStats:
    """Share of queries for which ``model`` gives no recommendation, by bucket."""
    return sparsity_from_results(queries, score_queries(model, queries, 1))


def overlap_from_results(res_a, res_b, k: int = REPORT_K, mode: str = "jaccard") -> float:
    total, n = Fraction(0), 0
    for a, b in zip(res_a, res_b, strict=True):
        if a.no_rec or b.no_rec:
            continue
        sa, sb = set(a.top[:k]), set(b.top[:k])
        if mode == "jaccard":
            total += Fraction(len(sa & sb), len(sa | sb))
        elif mode == "intersection":
            total += Fraction(len(sa & sb), k)
        else:
            raise ValueError(f"unknown overlap mode {mode!r}")
        n += 1
    if n == 0:
        raise NoComparableQueries("no query where both models recommend")
    return float(total / n)


def overlap_rate(model_a, model_b, queries, k: int = REPORT_K, mode: str = "jaccard") -> float:
    """Mean top-``k`` set similarity over queries where both models recommend."""
    return overlap_from_results(score_queries(model_a, queries, k), score_queries(model_b, queries, k), k, mode)


# -- output formats ------------------------------------------------------------

def _pct(x):
    return f"{100 * x:.3f}"


def metrics_table(rows: dict) -> str:
    """Human-readable table, one model per row, values in percent."""
    cols = ("model",) + MetricsReport.COLUMNS[:7] + ("SC", "queries", "no-rec")
    body = [
        (name,) + tuple(_pct(v) for v in rep.values()[:7]) + (_pct(rep.sc10), str(rep.queries), str(rep.no_rec))
        for name, rep in rows.items()
    ]
    widths = [max(len(r[i]) for r in [cols] + body) for i in range(len(cols))]
    fmt = lambda r: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([fmt(cols), fmt(tuple("-" * w for w in widths))] + [fmt(r) for r in body]) + "\n"


def metrics_tsv(rows: dict) -> str:
    head = "\t".join(("model",) + MetricsReport.COLUMNS + ("queries", "no_rec")) + "\n"
    lines = [
        "\t".join((name,) + tuple(repr(v) for v in rep.values()) + (str(rep.queries), str(rep.no_rec))) + "\n"
        for name, rep in rows.items()
    ]
    return head + "".join(lines)


def sparsity_tsv(stats: dict) -> str:
    """Per-model sparsity rates laid out like the count / length table."""
    names = list(stats)
    lines = ["bucket\t" + "\t".join(names) + "\n"]
    for k in COUNT_BUCKETS:
        lines.append(f"words={k}\t" + "\t".join(_rate_str(stats[n].by_count[k]) for n in names) + "\n")
    for lo, hi in LENGTH_BUCKETS:
        label = f"avglen=[{lo},{'' if hi is None else hi})"
        lines.append(label + "\t" + "\t".join(_rate_str(stats[n].by_length[(lo, hi)]) for n in names) + "\n")
    return "".join(lines)


def _rate_str(pair):
    no_rec, total = pair
    return f"{100 * no_rec / total:.4f}" if total else "nan"


def overlap_tsv(names, matrix) -> str:
    lines = ["overlap\t" + "\t".join(names) + "\n"]
    for i, a in enumerate(names):
        cells = [f"{matrix[i][j]:.6f}" if j >= i else "" for j in range(len(names))]
        lines.append(a + "\t" + "\t".join(cells) + "\n")
    return "".join(lines)


def parse_metrics_tsv(text: str) -> dict:
    lines = text.splitlines()
    cols = lines[0].split("\t")
    rows = {}
    for line in lines[1:]:
        parts = line.split("\t")
        vals = [float(x) for x in parts[1:10]]
        rows[parts[0]] = MetricsReport(*vals, queries=int(parts[10]), no_rec=int(parts[11]))
    assert cols[0] == "model"
    return rows

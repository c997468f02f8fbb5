"""Linear interpolation of model families and grid tuning of the weights.

Component order is ``(pn, pd)`` for two-way mixes and ``(pn, pw, pd)`` for
three-way mixes: ``pn`` is the count-based model, weighted by ``λ`` (or
``λ1``); ``pw`` is weighted by ``λ2``; ``pd`` takes the remaining mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Distribution, LanguageModel
from .errors import EmptyValidationSet, WeightOutOfRange
from .eval import (
    BETA,
    f1_at_k,
    mean_average_precision,
    precision,
    recall,
    score_probs,
    tally,
)

OBJECTIVES = ("MAP", "P@1", "R@10", "F1")
SWEEP_COLUMNS = ("P@1", "P@10", "R@10", "F1", "MAP")


def _array(d):
    if d is None:
        return None
    return d.probs if isinstance(d, Distribution) else np.asarray(d, dtype=np.float64)


def mix(dists: Sequence, weights: Sequence[float]) -> Optional[np.ndarray]:
    """Convex mix of probability vectors, dropping abstaining (``None``) ones.

    When some components abstain the remaining weights are renormalised; if
    those weights are all zero the present components are mixed equally.  A
    component that ends up with the whole mass is returned unchanged.
    """
    present = [(p, w) for p, w in zip(dists, weights, strict=True) if p is not None]
    if not present:
        return None
    used = [(p, w) for p, w in present if w > 0]
    if not used:
        used = [(p, 1.0) for p, _ in present]
    if len(used) == 1:
        return used[0][0]
    if len(present) < len(weights):
        total = sum(w for _, w in used)
        used = [(p, w / total) for p, w in used]
    out = used[0][1] * used[0][0]
    for p, w in used[1:]:
        out = out + w * p
    return out


def _check_unit(name, x):
    if not 0.0 <= x <= 1.0:
        raise WeightOutOfRange(f"{name}={x!r} outside [0, 1]")


def _wrap(p, like):
    if p is None:
        return None
    if any(isinstance(d, Distribution) for d in like):
        return p if isinstance(p, Distribution) else Distribution(p)
    return p


def interpolate2(pn, pd, lam: float):
    """``lam * pn + (1 - lam) * pd``; an abstaining side yields the other one."""
    _check_unit("lambda", lam)
    out = mix([_array(pn), _array(pd)], [lam, 1.0 - lam])
    if out is not None and pn is not None and out is _array(pn):
        return pn
    if out is not None and pd is not None and out is _array(pd):
        return pd
    return _wrap(out, (pn, pd))


def interpolate3(pn, pw, pd, lam1: float, lam2: float):
    """``lam1 * pn + lam2 * pw + (1 - lam1 - lam2) * pd``."""
    check_weights3(lam1, lam2)
    ins = (pn, pw, pd)
    out = mix([_array(d) for d in ins], [lam1, lam2, 1.0 - lam1 - lam2])
    for d in ins:
        if d is not None and out is _array(d):
            return d
    return _wrap(out, ins)


def check_weights3(lam1, lam2):
    _check_unit("lambda1", lam1)
    _check_unit("lambda2", lam2)
    if lam1 + lam2 > 1.0 + 1e-12:
        raise WeightOutOfRange(f"lambda1 + lambda2 = {lam1 + lam2!r} exceeds 1")


def full_weights(lams: Sequence[float]) -> tuple:
    """Expand ``(λ,)`` or ``(λ1, λ2)`` into one weight per component."""
    if len(lams) == 1:
        _check_unit("lambda", lams[0])
        return (lams[0], 1.0 - lams[0])
    if len(lams) == 2:
        check_weights3(*lams)
        return (lams[0], lams[1], 1.0 - lams[0] - lams[1])
    raise WeightOutOfRange("expected one or two mixture weights")


class InterpolatedModel(LanguageModel):
    """Fixed-weight mixture of models sharing one vocabulary."""

    kind = "hybrid"

    def __init__(self, components: Sequence[LanguageModel], lams: Sequence[float]):
        if len(components) != len(lams) + 1:
            raise ValueError("need one more component than mixture weights")
        sizes = {m.vocab_size for m in components}
        if len(sizes) != 1:
            raise ValueError("components disagree on vocabulary size")
        self.vocab_size = sizes.pop()
        self.components = tuple(components)
        self.lams = tuple(float(x) for x in lams)
        self.weights = full_weights(self.lams)

    def _probs(self, ctx):
        return mix([m._probs(ctx) for m in self.components], self.weights)


# -- tuning ------------------------------------------------------------------

def grid(step: float, n_components: int) -> list[tuple]:
    """Grid points in ascending (lexicographic) order.

    Points are ``i / n`` with integer ``i`` so that ``0`` and ``1`` are exact.
    """
    n = round(1.0 / step)
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step!r} does not divide 1 evenly")
    if n_components == 2:
        return [(i / n,) for i in range(n + 1)]
    if n_components == 3:
        return [(i / n, j / n) for i in range(n + 1) for j in range(n + 1 - i)]
    raise ValueError("tuning supports two or three components")


def _grid_weights(point, n):
    # exact complements: 1 - i/n computed as (n - i)/n
    ks = [round(x * n) for x in point]
    return tuple(k / n for k in ks) + ((n - sum(ks)) / n,)


def sweep_metrics(queries, results, beta=BETA) -> dict:
    t = tally(queries, results, (1, 10))
    p10, r10 = precision(t, 10), recall(t, 10)
    return {
        "P@1": precision(t, 1),
        "P@10": p10,
        "R@10": r10,
        "F1": f1_at_k(p10, r10, beta),
        "MAP": mean_average_precision(t),
    }


@dataclass
class TuneResult:
    lams: tuple
    objective: str
    score: Fraction
    rows: list  # (grid point, metrics dict of Fractions)

    @property
    def weights(self) -> tuple:
        return full_weights(self.lams)

    def to_tsv(self) -> str:
        names = ("lambda",) if len(self.lams) == 1 else ("lambda1", "lambda2")
        out = ["\t".join(names + SWEEP_COLUMNS) + "\n"]
        for point, m in self.rows:
            cells = [f"{x:.4f}" for x in point] + [f"{float(m[c]):.10f}" for c in SWEEP_COLUMNS]
            out.append("\t".join(cells) + "\n")
        return "".join(out)


def tune_lambda(models: Sequence[LanguageModel], queries, objective: str = "MAP", step: float = 0.1,
                beta=BETA) -> TuneResult:
    """Grid-search mixture weights on validation ``queries``.

    Every grid point is scored; the best ``objective`` wins and ties go to
    the smaller weight (lexicographically for two weights).
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    queries = list(queries)
    if not queries:
        raise EmptyValidationSet("no validation queries to tune on")
    points = grid(step, len(models))
    n = round(1.0 / step)
    cached = [[_array(m.next_distribution(q.context)) for m in models] for q in queries]
    rows, best, best_score = [], None, None
    for point in points:
        w = _grid_weights(point, n)
        results = [score_probs(mix(dists, w), q) for dists, q in zip(cached, queries)]
        metrics = sweep_metrics(queries, results, beta)
        rows.append((point, metrics))
        if best_score is None or metrics[objective] > best_score:
            best, best_score = point, metrics[objective]
    return TuneResult(best, objective, best_score, rows)


# -- weights file --------------------------------------------------------------

def weights_to_text(components: Sequence[str], lams: Sequence[float], objective: str = "") -> str:
    lines = [
        "components\t" + ",".join(components) + "\n",
        "lambdas\t" + ",".join(repr(float(x)) for x in lams) + "\n",
    ]
    if objective:
        lines.append(f"objective\t{objective}\n")
    return "".join(lines)


def weights_from_text(text: str) -> tuple[list[str], tuple]:
    fields = dict(line.split("\t", 1) for line in text.splitlines() if line.strip())
    comps = fields["components"].split(",")
    lams = tuple(float(x) for x in fields["lambdas"].split(","))
    if len(comps) != len(lams) + 1:
        raise ValueError("weights file: component / weight count mismatch")
    full_weights(lams)
    return comps, lams

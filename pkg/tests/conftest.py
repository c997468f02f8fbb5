import numpy as np
import pytest

from nextword.corpus import build_vocab


@pytest.fixture
def toy():
    """The three-sequence corpus {"a b", "a c", "a b"}."""
    seqs = [["a", "b"], ["a", "c"], ["a", "b"]]
    vocab = build_vocab(seqs)
    return seqs, vocab, [vocab.ids(s) for s in seqs]


def random_corpus(rng, n_seq, n_words, max_len=8):
    words = [f"w{i}" for i in range(n_words)]
    # zipf-ish so that some contexts repeat
    p = 1.0 / np.arange(1, n_words + 1)
    p /= p.sum()
    return [
        [words[i] for i in rng.choice(n_words, size=rng.integers(1, max_len + 1), p=p)]
        for _ in range(n_seq)
    ]


class TableModel:
    """Serves fixed probability vectors per context; missing context abstains."""

    def __init__(self, vocab_size, table):
        self.vocab_size = vocab_size
        self.table = table

    def next_distribution(self, ctx):
        from nextword.core import Distribution

        row = self.table.get(tuple(ctx))
        if row is None:
            return None
        p = np.zeros(self.vocab_size)
        for w, v in row.items():
            p[w] = v
        return Distribution(p)


# ids 2..6 spell x, y, z, u, v
FROZEN_WORDS = ["<s>", "<unk>", "ab", "cde", "f", "gh", "ijkl"]
X, Y, Z, U, V = 2, 3, 4, 5, 6


def frozen_fixture():
    """Five queries, one abstention, one truth outside the model's support.

    Hand-enumerated values: P@1 = 1/2, P@3 = 1/2, P@10 = 3/20, R@2 = 5/8,
    R@3 = R@10 = 3/4, F1@3 = 9/14, MAP = 25/48, SC@3 = 2/3.
    """
    from nextword.corpus import EvalQuery

    queries = [
        EvalQuery(("ab",), (X,), ((X, 1), (Y, 1))),
        EvalQuery(("cde",), (Y,), ((Z, 2),)),
        EvalQuery(("f",), (Z,), ((V, 1),)),
        EvalQuery(("gh",), (U,), ((X, 1), (U, 1))),
        EvalQuery(("ijkl",), (V,), ((Y, 1),)),
    ]
    table = {
        (X,): {X: 0.4, Z: 0.3, Y: 0.2, U: 0.07, V: 0.03},
        (Y,): {U: 0.5, Z: 0.3, X: 0.2},
        (U,): {U: 0.6, V: 0.4},
        (V,): {w: 0.2 for w in (X, Y, Z, U, V)},
    }
    lenc = [len(w) for w in FROZEN_WORDS]
    return queries, TableModel(len(FROZEN_WORDS), table), lenc


# -- acceptance summary ----------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    name = mark.args[0]
    ok = _CRITERIA.setdefault(name, True)
    if rep.failed or (rep.when == "call" and rep.skipped):
        _CRITERIA[name] = False
    elif not ok:
        _CRITERIA[name] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _CRITERIA.items():
        terminalreporter.write_line(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")

"""Command-line driver for the experiment pipeline.

Subcommands: synth, prepare, train, tune, eval, recommend, report, pipeline.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import hybrid, neural, ngram
from .config import (
    DEFAULT_COMBINATIONS,
    MODEL_KINDS,
    NEURAL_CLASS,
    NGRAM_KINDS,
    ExperimentConfig,
    load_config,
)
from .core import top_k
from .corpus import (
    NUM,
    Vocabulary,
    build_vocab,
    load_queries,
    make_queries,
    preprocess,
    read_corpus,
    save_manifest,
    save_queries,
    split_indices,
)
from .errors import (
    DataError,
    DivergenceDetected,
    EmptyCorpus,
    MissingArtifact,
    ModelFormatError,
    NoComparableQueries,
)
from .eval import (
    metrics_table,
    metrics_tsv,
    overlap_from_results,
    overlap_tsv,
    report_from_results,
    score_queries,
    sparsity_from_results,
    sparsity_tsv,
)
from .io import atomic_write_text
from .synthetic import SyntheticConfig, generate, write_corpus

log = logging.getLogger("nextword")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# -- workdir access ------------------------------------------------------------

def _need(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"{path}: not found ({hint})")
    return path


def load_vocab(cfg: ExperimentConfig) -> Vocabulary:
    return Vocabulary.load(_need(cfg.paths.vocab, "run 'prepare' first"))


def load_split(cfg: ExperimentConfig, part: str) -> list[list[str]]:
    return read_corpus(_need(cfg.paths.split_text(part), "run 'prepare' first"))


def load_model(cfg: ExperimentConfig, vocab: Vocabulary, name: str):
    """A trained model by kind, or a '+'-joined combination of kinds."""
    if "+" in name:
        return load_combination(cfg, vocab, name)
    if name not in MODEL_KINDS:
        raise UsageError(f"unknown model {name!r}; valid kinds: {', '.join(MODEL_KINDS)}")
    path = _need(cfg.paths.model(name), f"run 'train {name}' first")
    if name in NGRAM_KINDS:
        return ngram.load_model(path, vocab)
    model = neural.load(path)
    if model.vocab_size != len(vocab):
        raise ModelFormatError(f"{path}: vocabulary size {model.vocab_size} != {len(vocab)}")
    return model


def combination_parts(name: str) -> list[str]:
    parts = name.split("+")
    if len(parts) not in (2, 3) or len(set(parts)) != len(parts):
        raise UsageError(f"combination {name!r} must join two or three distinct model kinds with '+'")
    for p in parts:
        if p not in MODEL_KINDS:
            raise UsageError(f"unknown model {p!r} in {name!r}; valid kinds: {', '.join(MODEL_KINDS)}")
    return parts


def components(cfg, vocab, name):
    # weights attach to the reversed listing: "nlm+cbow+ngram" -> (ngram, cbow, nlm)
    return [load_model(cfg, vocab, p) for p in reversed(combination_parts(name))]


def load_combination(cfg, vocab, name):
    comps = components(cfg, vocab, name)
    wpath = cfg.paths.weights(name)
    if wpath.exists():
        _, lams = hybrid.weights_from_text(wpath.read_text(encoding="utf-8"))
    elif name in cfg.lambdas:
        lams = cfg.lambdas[name]
    else:
        raise MissingArtifact(f"{wpath}: not found and no lambda.{name} setting (run 'tune {name}')")
    return hybrid.InterpolatedModel(comps, lams)


# -- commands ----------------------------------------------------------------

def cmd_synth(cfg, args):
    scfg = SyntheticConfig(n_sequences=args.sequences, seed=cfg.seed)
    corpus = generate(scfg, split_seed=cfg.seed)
    write_corpus(args.out, corpus)
    log.info("wrote %d synthetic sequences to %s", len(corpus), args.out)


def cmd_prepare(cfg, args=None):
    if not cfg.corpus:
        raise UsageError("no corpus given (use --corpus or 'corpus =' in the config file)")
    corpus = [preprocess(s) for s in read_corpus(cfg.corpus)]
    if not any(corpus):
        raise EmptyCorpus("no tokens left after preprocessing", path=cfg.corpus)
    parts = dict(zip(("train", "valid", "test"), split_indices(len(corpus), cfg.seed)))
    train = [corpus[i] for i in parts["train"]]
    vocab = build_vocab(train, cfg.min_count)
    p = cfg.paths
    vocab.save(p.vocab)
    for part, idx in parts.items():
        seqs = [corpus[i] for i in idx]
        save_manifest(p.manifest(part), idx)
        atomic_write_text(p.split_text(part), "".join(" ".join(s) + "\n" for s in seqs))
        if part != "train":
            save_queries(p.queries(part), make_queries(seqs, vocab), vocab)
    atomic_write_text(p.config, cfg.to_text())
    log.info(
        "prepared %s: %d/%d/%d sequences, %d words",
        p.root, len(parts["train"]), len(parts["valid"]), len(parts["test"]), len(vocab),
    )


def train_one(cfg, kind, vocab=None, train_ids=None):
    vocab = load_vocab(cfg) if vocab is None else vocab
    if train_ids is None:
        train_ids = [vocab.ids(s) for s in load_split(cfg, "train")]
    path = cfg.paths.model(kind)
    if kind in NGRAM_KINDS:
        table = ngram.count_ngrams(train_ids, len(vocab), cfg.order)
        if kind == "ngram":
            model = ngram.NGramModel(table, unigram_fallback=cfg.unigram_fallback)
        else:
            model = ngram.KneserNeyModel(table)
        ngram.save_model(path, model, vocab)
    else:
        cls_kind = NEURAL_CLASS[kind][0]
        model = neural.train(cls_kind, train_ids, vocab, cfg.hyper(kind), cfg.train_config(kind))
        model.meta["name"] = kind
        neural.save(path, model)
    log.info("trained %s -> %s", kind, path)
    return model


def cmd_train(cfg, args):
    kinds = MODEL_KINDS if "all" in args.kinds else args.kinds
    vocab = load_vocab(cfg)
    ids = [vocab.ids(s) for s in load_split(cfg, "train")]
    for kind in kinds:
        train_one(cfg, kind, vocab, ids)


def tune_one(cfg, combo, vocab=None, queries=None):
    vocab = load_vocab(cfg) if vocab is None else vocab
    if queries is None:
        queries = load_queries(_need(cfg.paths.queries("valid"), "run 'prepare' first"), vocab)
    comps = components(cfg, vocab, combo)
    res = hybrid.tune_lambda(comps, queries, cfg.objective, cfg.step)
    atomic_write_text(cfg.paths.sweep(combo), res.to_tsv())
    atomic_write_text(
        cfg.paths.weights(combo), hybrid.weights_to_text(combination_parts(combo), res.lams, cfg.objective)
    )
    log.info("tuned %s: lambdas %s, validation %s %.5f", combo, res.lams, cfg.objective, float(res.score))
    return res


def cmd_tune(cfg, args):
    vocab = load_vocab(cfg)
    for combo in args.combinations:
        res = tune_one(cfg, combo, vocab)
        print(f"{combo}\t{','.join(f'{x:.4f}' for x in res.lams)}\t{cfg.objective}={float(res.score):.6f}")


def available_models(cfg) -> list[str]:
    names = [k for k in MODEL_KINDS if cfg.paths.model(k).exists()]
    tuned = sorted(p.name[: -len(".weights")] for p in (cfg.paths.root / "tune").glob("*.weights"))
    names += [c for c in DEFAULT_COMBINATIONS if c in tuned] + [c for c in tuned if c not in DEFAULT_COMBINATIONS]
    return names


def evaluate_models(cfg, names, split="test"):
    vocab = load_vocab(cfg)
    queries = load_queries(_need(cfg.paths.queries(split), "run 'prepare' first"), vocab)
    lenc = vocab.char_lengths()
    results, reports, sparsity = {}, {}, {}
    labels = unique_labels(names)
    for name, label in zip(names, labels):
        res = score_queries(load_model(cfg, vocab, name), queries)
        results[label] = res
        reports[label] = report_from_results(queries, res, lenc)
        sparsity[label] = sparsity_from_results(queries, res)
    matrix = [[_overlap(results[a], results[b], cfg.overlap) for b in labels] for a in labels]
    names = labels
    p = cfg.paths
    atomic_write_text(p.report("metrics.tsv"), metrics_tsv(reports))
    atomic_write_text(p.report("metrics.txt"), metrics_table(reports))
    atomic_write_text(p.report("sparsity.tsv"), sparsity_tsv(sparsity))
    atomic_write_text(p.report("overlap.tsv"), overlap_tsv(names, matrix))
    return reports, sparsity, matrix


def unique_labels(names):
    seen, out = {}, []
    for n in names:
        seen[n] = seen.get(n, 0) + 1
        out.append(n if seen[n] == 1 else f"{n}#{seen[n]}")
    return out


def _overlap(a, b, mode):
    try:
        return overlap_from_results(a, b, mode=mode)
    except NoComparableQueries:
        return float("nan")


def cmd_eval(cfg, args):
    names = args.models or available_models(cfg)
    if not names:
        raise MissingArtifact(f"{cfg.paths.root / 'models'}: no trained models (run 'train' first)")
    reports, _, _ = evaluate_models(cfg, names, args.split)
    sys.stdout.write(metrics_table(reports))


def cmd_report(cfg, args):
    p = cfg.paths
    out = [_need(p.report("metrics.txt"), "run 'eval' first").read_text(encoding="utf-8")]
    for name, title in (("sparsity.tsv", "no-recommendation rate (%)"), ("overlap.tsv", f"top-10 overlap ({cfg.overlap})")):
        path = p.report(name)
        if path.exists():
            out.append(f"\n{title}\n" + path.read_text(encoding="utf-8"))
    weights = sorted((p.root / "tune").glob("*.weights"))
    if weights:
        out.append("\ntuned mixture weights\n")
        for w in weights:
            comps, lams = hybrid.weights_from_text(w.read_text(encoding="utf-8"))
            out.append(f"{'+'.join(comps)}\t{','.join(f'{x:.4f}' for x in lams)}\n")
    sys.stdout.write("".join(out))


def cmd_pipeline(cfg, args):
    cmd_prepare(cfg)
    vocab = load_vocab(cfg)
    ids = [vocab.ids(s) for s in load_split(cfg, "train")]
    for kind in MODEL_KINDS:
        train_one(cfg, kind, vocab, ids)
    valid = load_queries(cfg.paths.queries("valid"), vocab)
    for combo in DEFAULT_COMBINATIONS:
        tune_one(cfg, combo, vocab, valid)
    reports, _, _ = evaluate_models(cfg, available_models(cfg))
    sys.stdout.write(metrics_table(reports))


def cmd_recommend(cfg, args, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    vocab = load_vocab(cfg)
    model = load_model(cfg, vocab, args.model)
    session = Session(model, vocab, args.k or cfg.top)
    stdout.write("type context words; a number picks a recommendation; blank line resets\n")
    stdout.write(session.prompt())
    stdout.flush()
    for line in stdin:
        stdout.write(session.handle(line.rstrip("\n")))
        stdout.write(session.prompt())
        stdout.flush()
    stdout.write("\n")


class Session:
    """State of the interactive recommender: running context and last list."""

    def __init__(self, model, vocab, k=5):
        self.model, self.vocab, self.k = model, vocab, k
        self.context: list[str] = []
        self.shown: list[int] = []

    def prompt(self) -> str:
        shown = " ".join(t if t in self.vocab else f"{t}[<unk>]" for t in self.context)
        return f"[{shown}]> "

    def handle(self, line: str) -> str:
        text = line.strip()
        if not text:
            self.context, self.shown = [], []
            return "(context cleared)\n"
        if text.isdigit() and self.shown:
            i = int(text)
            if not 1 <= i <= len(self.shown):
                return f"no item {i}; choose 1..{len(self.shown)}\n"
            self.context.append(self.vocab.word(self.shown[i - 1]))
        else:
            self.context.extend(self.normalize(t) for t in text.split())
        return self.recommend()

    def normalize(self, token: str) -> str:
        # digits map to NUM as in training; other words are kept as typed
        if token in self.vocab:
            return token
        return NUM if preprocess([token]) == [NUM] else token

    def recommend(self) -> str:
        out = [f"unknown word: {t} -> <unk>\n" for t in self.context if t not in self.vocab]
        d = self.model.next_distribution(self.vocab.ids(self.context))
        if d is None:
            self.shown = []
            return "".join(out) + "(no recommendation)\n"
        items = top_k(d, self.k)
        self.shown = [w for w, _ in items]
        out += [f"  {i}. {self.vocab.word(w)}\t{p:.4f}\n" for i, (w, p) in enumerate(items, 1)]
        return "".join(out)


# -- argument parsing ------------------------------------------------------------

def build_parser() -> Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="experiment config file (key = value lines)")
    common.add_argument("-w", "--workdir", help="working directory (also NEXTWORD_WORKDIR)")
    common.add_argument("--profile", choices=("desk", "paper"), help="built-in hyperparameter profile")
    common.add_argument("--seed", type=int, help="random seed for splitting and training")
    common.add_argument("--corpus", help="raw corpus file, one sequence per line")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("-q", "--quiet", action="store_true", help="only print results and errors")

    parser = Parser(prog="nextword", description="Next-word recommendation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("synth", parents=[common], help="write the synthetic evaluation corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--sequences", type=int, default=5000)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", parents=[common], help="preprocess, split, build vocabulary and queries")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", parents=[common], help="train and save models")
    p.add_argument("kinds", nargs="+", choices=MODEL_KINDS + ("all",), metavar="KIND",
                   help=f"one of: {', '.join(MODEL_KINDS)}, all")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", parents=[common], help="grid-tune mixture weights on validation queries")
    p.add_argument("combinations", nargs="+", metavar="COMBO", help="e.g. nlm+ngram or nlm+cbow+ngram")
    p.add_argument("--objective", choices=hybrid.OBJECTIVES)
    p.add_argument("--step", type=float)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", parents=[common], help="evaluate models and write reports")
    p.add_argument("models", nargs="*", metavar="MODEL", help="kinds or combinations (default: all available)")
    p.add_argument("--split", choices=("test", "valid"), default="test")
    p.add_argument("--overlap", choices=("jaccard", "intersection"))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("recommend", parents=[common], help="interactive recommendation session")
    p.add_argument("model", metavar="MODEL")
    p.add_argument("-k", type=int, help="list length (default 5)")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("report", parents=[common], help="print the latest reports")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", parents=[common], help="prepare, train all, tune, eval")
    p.set_defaults(func=cmd_pipeline)
    return parser


def config_from_args(args) -> ExperimentConfig:
    overrides = []
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        overrides.append((key.strip(), value.strip()))
    for key in ("profile", "workdir", "seed", "corpus"):
        if getattr(args, key, None) is not None:
            overrides.append((key, str(getattr(args, key))))
    for key in ("objective", "step", "overlap"):
        if getattr(args, key, None) is not None:
            overrides.append((key, str(getattr(args, key))))
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr
        )
        cfg = config_from_args(args)
        args.func(cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DivergenceDetected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DataError, ValueError) as exc:
        # ValueError here means a bad setting: weights, grid step, learning rate
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    return 0

"""Experiment configuration: profiles, a key-value file, and overrides.

A config file holds one ``key = value`` per line (``#`` starts a comment)::

    profile = desk
    corpus = data/corpus.txt
    seed = 7
    nlm.dim = 32
    nlm.epochs = 3
    lambda.nlm+ngram = 0.5

Later sources win: profile defaults, then the file, then ``--set`` pairs
and explicit command-line flags.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import DataError
from .neural import TrainConfig

WORKDIR_ENV = "NEXTWORD_WORKDIR"

NGRAM_KINDS = ("ngram", "ngram-kn")
NEURAL_KINDS = ("nlm", "cbow", "cbow-weighted", "rnn", "lstm")
MODEL_KINDS = NGRAM_KINDS + NEURAL_KINDS

# kind -> (registry class, fixed hyperparameters)
NEURAL_CLASS = {
    "nlm": ("nlm", {}),
    "cbow": ("cbow", {"weighted": False, "reverse": False}),
    "cbow-weighted": ("cbow", {"weighted": True, "reverse": False}),
    "rnn": ("rnn", {}),
    "lstm": ("lstm", {}),
}

TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig) if f.name != "seed")

PROFILES = {
    "paper": {
        "nlm": {"context": 6, "dim": 100, "hidden": 200},
        "cbow": {"window": 5, "dim": 200, "negatives": 3},
        "cbow-weighted": {"window": 5, "dim": 200, "negatives": 3},
        "rnn": {"dim": 200},
        "lstm": {"dim": 300, "hidden": 300},
    },
    "desk": {
        "nlm": {"context": 4, "dim": 16, "hidden": 32},
        "cbow": {"window": 3, "dim": 24, "negatives": 3},
        "cbow-weighted": {"window": 3, "dim": 24, "negatives": 3},
        "rnn": {"dim": 24},
        "lstm": {"dim": 24, "hidden": 24},
    },
}

TRAIN_DEFAULTS = {
    "nlm": {"lr": 0.05},
    "cbow": {"lr": 0.05},
    "cbow-weighted": {"lr": 0.05},
    "rnn": {"lr": 0.1},
    "lstm": {"lr": 0.1},
}

DEFAULT_LAMBDAS = {
    "nlm+ngram": (0.5,),
    "cbow+ngram": (0.8,),
    "rnn+ngram": (0.9,),
    "lstm+ngram": (0.9,),
    "nlm+cbow+ngram": (0.3, 0.2),
}

DEFAULT_COMBINATIONS = tuple(DEFAULT_LAMBDAS)


@dataclass
class ExperimentConfig:
    profile: str = "desk"
    corpus: str = ""
    workdir: str = "work"
    seed: int = 0
    min_count: int = 1
    order: int = 3
    objective: str = "MAP"
    step: float = 0.1
    overlap: str = "jaccard"
    top: int = 5
    unigram_fallback: bool = False
    models: dict = field(default_factory=dict)  # kind -> {"hyper": {...}, "train": {...}}
    lambdas: dict = field(default_factory=lambda: dict(DEFAULT_LAMBDAS))

    SCALARS = ("profile", "corpus", "workdir", "seed", "min_count", "order", "objective", "step", "overlap", "top", "unigram_fallback")

    @classmethod
    def from_profile(cls, profile: str = "desk") -> "ExperimentConfig":
        if profile not in PROFILES:
            raise DataError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        models = {}
        for kind in NEURAL_KINDS:
            hyper = dict(PROFILES[profile][kind])
            hyper.update(NEURAL_CLASS[kind][1])
            models[kind] = {"hyper": hyper, "train": dict(TRAIN_DEFAULTS[kind])}
        return cls(profile=profile, models=models)

    def set(self, key: str, value: str):
        """Apply one ``key = value`` setting given as text."""
        key = key.strip()
        value = value.strip()
        if key in self.SCALARS:
            if key == "profile":
                raise DataError("profile must be chosen before other settings")
            cur = getattr(self, key)
            setattr(self, key, _coerce(type(cur), value, key))
        elif key.startswith("lambda."):
            combo = key[len("lambda."):]
            self.lambdas[combo] = tuple(float(x) for x in value.split(","))
        elif "." in key:
            kind, name = key.rsplit(".", 1)
            if kind not in self.models:
                raise DataError(f"unknown model kind in key {key!r}")
            section = "train" if name in TRAIN_KEYS else "hyper"
            if section == "hyper" and name not in self.models[kind]["hyper"]:
                raise DataError(f"unknown setting {key!r}")
            self.models[kind][section][name] = _parse_scalar(value)
        else:
            raise DataError(f"unknown setting {key!r}")

    def train_config(self, kind: str) -> TrainConfig:
        return TrainConfig(seed=self.seed, **self.models[kind]["train"])

    def hyper(self, kind: str) -> dict:
        return dict(self.models[kind]["hyper"])

    def to_text(self) -> str:
        """Settings as config-file text; the workdir is left out since the
        file is stored inside it."""
        lines = [f"{k} = {getattr(self, k)}\n" for k in self.SCALARS if k != "workdir"]
        for kind in sorted(self.models):
            for section in ("hyper", "train"):
                for name, v in sorted(self.models[kind][section].items()):
                    lines.append(f"{kind}.{name} = {v}\n")
        for combo, lams in sorted(self.lambdas.items()):
            lines.append(f"lambda.{combo} = {','.join(repr(x) for x in lams)}\n")
        return "".join(lines)

    @property
    def paths(self) -> "WorkdirLayout":
        return WorkdirLayout(Path(self.workdir))


def _parse_scalar(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def _coerce(kind, value, key):
    if kind is bool:
        if value.lower() not in ("true", "false", "1", "0"):
            raise DataError(f"bad value {value!r} for {key}")
        return value.lower() in ("true", "1")
    try:
        return kind(value)
    except ValueError:
        raise DataError(f"bad value {value!r} for {key}")


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: config file not found")
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise DataError(f"{path}: {exc}")
    return dict(parser["experiment"])


def load_config(path=None, overrides=(), env=None) -> ExperimentConfig:
    """Build the effective configuration.

    ``overrides`` is a sequence of ``(key, value)`` text pairs applied last.
    The ``NEXTWORD_WORKDIR`` environment variable beats the file's workdir
    but not an explicit override.
    """
    env = os.environ if env is None else env
    settings = read_config_file(path) if path else {}
    overrides = list(overrides)
    profile = dict(overrides).get("profile", settings.get("profile", "desk"))
    cfg = ExperimentConfig.from_profile(profile)
    for key, value in settings.items():
        if key != "profile":
            cfg.set(key, value)
    if env.get(WORKDIR_ENV):
        cfg.workdir = env[WORKDIR_ENV]
    for key, value in overrides:
        if key != "profile":
            cfg.set(key, value)
    return cfg


@dataclass(frozen=True)
class WorkdirLayout:
    root: Path

    @property
    def vocab(self):
        return self.root / "vocab.tsv"

    @property
    def config(self):
        return self.root / "config.txt"

    def manifest(self, part):
        return self.root / "splits" / f"{part}.idx"

    def split_text(self, part):
        return self.root / "splits" / f"{part}.txt"

    def queries(self, part):
        return self.root / "queries" / f"{part}.tsv"

    def model(self, kind):
        return self.root / "models" / f"{kind}.model"

    def weights(self, combo):
        return self.root / "tune" / f"{combo}.weights"

    def sweep(self, combo):
        return self.root / "tune" / f"{combo}.sweep.tsv"

    def report(self, name):
        return self.root / "reports" / name

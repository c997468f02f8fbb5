"""Neural language models trained from scratch with numpy."""

import numpy as np

from . import base
from .base import NeuralModel, TrainConfig, grad_check, sigmoid, train_model
from .cbow import CBOW, noise_distribution, position_weights
from .lstm import LSTM
from .nlm import NLM
from .rnn import RNN

__all__ = [
    "CBOW", "LSTM", "NLM", "RNN", "NeuralModel", "REGISTRY", "TrainConfig",
    "build", "grad_check", "load", "noise_distribution", "position_weights",
    "save", "sigmoid", "train", "train_model",
]

REGISTRY = {cls.kind: cls for cls in (NLM, CBOW, RNN, LSTM)}


def build(kind: str, vocab, hyper: dict, cfg: TrainConfig) -> NeuralModel:
    """Freshly initialised model of ``kind`` for ``vocab``."""
    cls = REGISTRY[kind]
    rng = np.random.default_rng(cfg.seed)
    model = cls.init(len(vocab), rng, cfg.init_scale, unk_trained=vocab.unk_trained, **hyper)
    if kind == "cbow":
        model.noise = noise_distribution(vocab.freqs)
    return model


def train(kind: str, sequences, vocab, hyper: dict, cfg: TrainConfig) -> NeuralModel:
    """Build and train a model on id sequences; see :func:`train_model`."""
    return train_model(build(kind, vocab, hyper, cfg), sequences, cfg)


def save(path, model):
    base.save(path, model)


def load(path) -> NeuralModel:
    return base.load(path, REGISTRY)

"""Shared machinery for the neural models: SGD training and model files."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..core import N_RESERVED, UNK_ID, LanguageModel
from ..errors import DivergenceDetected, ModelFormatError
from ..io import atomic_write_bytes

log = logging.getLogger(__name__)

MAGIC = b"NEXTWORD-NEURAL 1\n"


def sigmoid(x):
    # tanh form: no overflow, and saturates to exactly 0.0 / 1.0
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class TrainConfig:
    lr: float = 0.05
    epochs: int = 5
    seed: int = 0
    init_scale: float = 0.05
    weight_decay: float = 1e-5
    clip: float = 5.0
    bptt: int = 20

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.bptt < 1:
            raise ValueError("bptt must be at least 1")


class NeuralModel(LanguageModel):
    """Parameters in ``self.params`` (name -> float64 array) plus hyperparameters.

    Subclasses define ``kind``, ``shapes``, ``init``, ``forward``,
    ``loss_and_grad`` and ``examples``.  ``decayed`` names the weights that
    carry the L2 penalty; ``clipped`` switches on gradient-norm clipping and
    ``recurrent`` passes the truncation length to ``loss_and_grad``.
    """

    kind = ""
    decayed: tuple = ()
    clipped = False
    recurrent = False

    def __init__(self, vocab_size: int, params: dict, unk_trained: bool = False, **hyper):
        self.vocab_size = vocab_size
        self.hyper = hyper
        self.unk_trained = unk_trained
        expected = self.shapes(vocab_size, **hyper)
        if set(params) != set(expected):
            raise ModelFormatError(f"{self.kind}: parameters {sorted(params)} != {sorted(expected)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ModelFormatError(f"{self.kind}: {name} has shape {params[name].shape}, expected {shape}")
        self.params = params
        self.meta = {}

    @classmethod
    def shapes(cls, vocab_size, **hyper) -> dict:
        raise NotImplementedError

    @classmethod
    def init(cls, vocab_size, rng, scale, unk_trained=False, **hyper):
        params = {
            name: rng.uniform(-scale, scale, size=shape) if len(shape) > 1 else np.zeros(shape)
            for name, shape in cls.shapes(vocab_size, **hyper).items()
        }
        return cls(vocab_size, params, unk_trained=unk_trained, **hyper)

    def freeze(self):
        for p in self.params.values():
            p.flags.writeable = False
        return self

    def _probs(self, ctx):
        if not self.unk_trained and all(w == UNK_ID for w in ctx):
            return None
        return self.forward(ctx)

    def penalty(self, weight_decay, grads):
        """Add the L2 term to ``grads`` in place and return its value."""
        if not weight_decay:
            return 0.0
        total = 0.0
        for name in self.decayed:
            p = self.params[name]
            total += float(np.sum(p * p))
            grads[name] += weight_decay * p
        return 0.5 * weight_decay * total

    def zero_grads(self):
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    # training hooks
    def examples(self, sequences) -> list:
        raise NotImplementedError

    def prepare(self, example, rng):
        return example


def targets_ok(w):
    return w >= N_RESERVED


def train_model(model: NeuralModel, sequences, cfg: TrainConfig) -> NeuralModel:
    """Seeded plain SGD, one example per update, linear learning-rate decay.

    The visiting order of epoch ``e`` is a permutation drawn from
    ``(seed, e)`` alone, so training is reproducible bit for bit.
    """
    examples = model.examples(sequences)
    if not examples:
        raise ValueError("no training examples")
    extra = {"bptt": cfg.bptt} if model.recurrent else {}
    losses = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr * (cfg.epochs - epoch) / cfg.epochs
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(examples))
        noise_rng = np.random.default_rng([cfg.seed, epoch, 1])
        total = 0.0
        for i in order:
            ex = model.prepare(examples[i], noise_rng)
            # overflow shows up as a non-finite loss, handled just below
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                loss, grads = model.loss_and_grad([ex], cfg.weight_decay, **extra)
            if not math.isfinite(loss):
                raise DivergenceDetected(epoch + 1, loss)
            if model.clipped and cfg.clip:
                norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if norm > cfg.clip:
                    scale = cfg.clip / norm
                    for g in grads.values():
                        g *= scale
            for name, g in grads.items():
                model.params[name] -= lr * g
            total += loss
        mean = total / len(examples)
        if not math.isfinite(mean) or any(not np.all(np.isfinite(p)) for p in model.params.values()):
            raise DivergenceDetected(epoch + 1, mean)
        losses.append(float(mean))
        log.info("%s epoch %d/%d lr %.4g mean loss %.6f", model.kind, epoch + 1, cfg.epochs, lr, mean)
    model.meta.update(config=asdict(cfg), epoch_losses=losses)
    return model.freeze()


# -- model files -------------------------------------------------------------

def model_to_bytes(model: NeuralModel) -> bytes:
    names = sorted(model.params)
    header = {
        "kind": model.kind,
        "vocab_size": model.vocab_size,
        "hyper": model.hyper,
        "unk_trained": model.unk_trained,
        "meta": model.meta,
        "params": [[n, list(model.params[n].shape)] for n in names],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"
    body = b"".join(np.ascontiguousarray(model.params[n], dtype="<f8").tobytes() for n in names)
    return MAGIC + head + body


def model_from_bytes(data: bytes, registry: dict) -> NeuralModel:
    if not data.startswith(MAGIC):
        raise ModelFormatError("not a neural model file")
    end = data.index(b"\n", len(MAGIC))
    try:
        header = json.loads(data[len(MAGIC):end].decode("utf-8"))
        cls = registry[header["kind"]]
    except (ValueError, KeyError) as exc:
        raise ModelFormatError(f"bad model header: {exc}")
    body = memoryview(data)[end + 1:]
    params, offset = {}, 0
    for name, shape in header["params"]:
        size = int(np.prod(shape)) * 8
        if offset + size > len(body):
            raise ModelFormatError("model file truncated")
        params[name] = np.frombuffer(body[offset:offset + size], dtype="<f8").astype(np.float64).reshape(shape)
        offset += size
    if offset != len(body):
        raise ModelFormatError(f"{len(body) - offset} trailing bytes in model file")
    model = cls(header["vocab_size"], params, unk_trained=header["unk_trained"], **header["hyper"])
    model.meta = header.get("meta", {})
    return model.freeze()


def save(path, model: NeuralModel):
    atomic_write_bytes(path, model_to_bytes(model))


def load(path, registry) -> NeuralModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read(), registry)


def grad_check(model: NeuralModel, batch, weight_decay=0.0, eps=1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    Entries where both gradients are below 1e-12 in magnitude are skipped.
    """
    _, grads = model.loss_and_grad(batch, weight_decay)
    worst = 0.0
    for name, p in model.params.items():
        flat = p.reshape(-1)
        g = grads[name].reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up, _ = model.loss_and_grad(batch, weight_decay)
            flat[i] = old - eps
            down, _ = model.loss_and_grad(batch, weight_decay)
            flat[i] = old
            num = (up - down) / (2 * eps)
            scale = max(abs(num), abs(g[i]))
            if scale < 1e-12:
                continue
            worst = max(worst, abs(num - g[i]) / scale)
    return worst

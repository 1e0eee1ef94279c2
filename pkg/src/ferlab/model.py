"""Fully-connected ReLU network with hand-derived backward pass and momentum SGD."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

CHECKPOINT_VERSION = 1


@dataclass
class MlpModel:
    layer_sizes: list[int]
    weights: list[np.ndarray]  # W_l has shape (fan_in, fan_out)
    biases: list[np.ndarray]
    seed: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.seed,
        )


@dataclass
class BatchOutput:
    logits: np.ndarray
    inputs: list[np.ndarray]  # input to each affine layer
    preacts: list[np.ndarray]  # hidden pre-activations (before ReLU)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.extend((w.ravel(), b.ravel()))
        return np.concatenate(parts)


@dataclass
class OptimizerState:
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    velocity_w: list[np.ndarray] = field(default_factory=list)
    velocity_b: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_model(cls, model: MlpModel, lr=0.1, momentum=0.9, weight_decay=5e-4):
        if not lr >= 0:
            raise ConfigError(f"learning rate must be non-negative, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {momentum}")
        return cls(
            lr,
            momentum,
            weight_decay,
            [np.zeros_like(w) for w in model.weights],
            [np.zeros_like(b) for b in model.biases],
        )


def init_model(layer_sizes, seed: int) -> MlpModel:
    """Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ConfigError(f"need at least two positive layer sizes, got {layer_sizes!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, int(seed))


def forward(model: MlpModel, batch) -> BatchOutput:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layer_sizes[0]:
        raise ShapeError(
            f"expected a batch of width {model.layer_sizes[0]}, got shape {x.shape}"
        )
    inputs, preacts = [], []
    h = x
    last = model.n_layers - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(h)
        a = h @ w + b
        if i < last:
            preacts.append(a)
            h = np.maximum(a, 0.0)
        else:
            h = a
    return BatchOutput(h, inputs, preacts)


def predict(model: MlpModel, batch) -> np.ndarray:
    """Argmax class per row; ties go to the lowest index."""
    return np.argmax(forward(model, batch).logits, axis=1)


def backward(model: MlpModel, cache: BatchOutput, dL_dlogits) -> Gradients:
    """Gradients of the batch-mean loss.

    ``dL_dlogits`` holds per-sample gradients, one row per sample; the result
    is averaged over rows. ReLU uses subgradient 0 at exactly 0.
    """
    g = np.asarray(dL_dlogits, dtype=np.float64)
    if g.shape != cache.logits.shape:
        raise ShapeError(f"gradient shape {g.shape} != logits shape {cache.logits.shape}")
    g = g / g.shape[0]
    gw = [None] * model.n_layers
    gb = [None] * model.n_layers
    for i in range(model.n_layers - 1, -1, -1):
        gw[i] = cache.inputs[i].T @ g
        gb[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ model.weights[i].T) * (cache.preacts[i - 1] > 0.0)
    return Gradients(gw, gb)


def sgd_step(model: MlpModel, state: OptimizerState, grads: Gradients):
    """Momentum SGD with L2 weight decay folded into the gradient.

    v <- m*v + g + wd*theta ; theta <- theta - lr*v. Updates in place.
    """
    for i, (gw, gb) in enumerate(zip(grads.weights, grads.biases)):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NumericError(f"non-finite gradient in layer {i}")
    for i in range(model.n_layers):
        for theta, vel, g in (
            (model.weights[i], state.velocity_w[i], grads.weights[i]),
            (model.biases[i], state.velocity_b[i], grads.biases[i]),
        ):
            if theta.shape != g.shape:
                raise ShapeError(f"layer {i}: gradient {g.shape} vs parameter {theta.shape}")
            vel *= state.momentum
            vel += g + state.weight_decay * theta
            theta -= state.lr * vel
    return model, state


def save_checkpoint(model: MlpModel, path) -> None:
    """Write an ``.npz`` container.

    Keys: ``version`` (int), ``layer_sizes`` (int64 array), ``seed`` (int),
    then ``W0, b0, W1, b1, ...`` in layer order, all float64.
    """
    arrays = {
        "version": np.array(CHECKPOINT_VERSION),
        "layer_sizes": np.array(model.layer_sizes, dtype=np.int64),
        "seed": np.array(model.seed, dtype=np.int64),
    }
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> MlpModel:
    with np.load(Path(path)) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        sizes = [int(s) for s in data["layer_sizes"]]
        n = len(sizes) - 1
        weights = [data[f"W{i}"].copy() for i in range(n)]
        biases = [data[f"b{i}"].copy() for i in range(n)]
        return MlpModel(sizes, weights, biases, int(data["seed"]))

"""Finite-difference checks of every hand-derived gradient in the package.

Two levels are checked at random points: loss gradients with respect to
logits, and full-network parameter gradients from :func:`ferlab.model.backward`.
"""
from __future__ import annotations

import numpy as np

from . import losses
from .losses import LossSpec
from .model import backward, forward, init_model
from .numerics import finite_diff_check

H = 1e-5
TOLERANCE = 1e-5


def _random_distribution(rng, K: int) -> np.ndarray:
    return rng.dirichlet(np.ones(K))


def _loss_cases(rng, K: int):
    """Yield ``(name, fn(logits_row) -> (value, grad))`` for one random configuration."""
    y = int(rng.integers(K))
    target = _random_distribution(rng, K)
    tau = float(rng.choice([1.0, 2.0, 5.0, 10.0]))
    k = int(rng.integers(0, 11))
    fer = LossSpec(method="fer", tau=tau, total_epochs=10)
    fer_sq = LossSpec(method="fer", tau=tau, total_epochs=10, kl_tau_squared=True)
    fer_rev = LossSpec(method="fer", tau=tau, total_epochs=10, kl_model_first=True)
    eps = float(rng.uniform(0, 0.5))
    lam = float(rng.uniform(0, 1))

    def wrap(f):
        def fn(z):
            r = f(z)
            return r.value, r.grad
        return fn

    yield "std", wrap(lambda z: losses.std_loss(z, y))
    yield "fer", wrap(lambda z: losses.fer_loss(z, y, target, k, fer))
    yield "fer_tau_squared", wrap(lambda z: losses.fer_loss(z, y, target, k, fer_sq))
    yield "fer_model_first", wrap(lambda z: losses.fer_loss(z, y, target, k, fer_rev))
    yield "lsr", wrap(lambda z: losses.lsr_loss(z, y, eps))
    yield "maxent", wrap(lambda z: losses.maxent_loss(z, y, lam))


def check_loss_gradients(n_points: int = 50, seed: int = 0, K: int = 5) -> dict[str, float]:
    """Max relative error per loss over ``n_points`` random logit vectors."""
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(n_points):
        z = rng.uniform(-4, 4, size=K)
        for name, fn in _loss_cases(rng, K):
            _, g = fn(z)
            err = finite_diff_check(lambda x: fn(x)[0], g, z, H)
            worst[name] = max(worst.get(name, 0.0), err)
    return worst


def _flatten(model):
    return np.concatenate([p.ravel() for p in model.parameters()])


def _unflatten_into(model, flat):
    pos = 0
    for p in model.parameters():
        p[...] = flat[pos : pos + p.size].reshape(p.shape)
        pos += p.size


def network_loss_fn(model, x, y, spec: LossSpec, k: int = 0, targets=None, present=None):
    """Return ``(f(flat_params) -> mean loss, analytic gradient at current params)``."""

    def f(flat):
        saved = _flatten(model)
        _unflatten_into(model, flat)
        try:
            vals, _ = losses.batch_loss(spec, forward(model, x).logits, y, k, targets, present)
        finally:
            _unflatten_into(model, saved)
        return float(vals.mean())

    out = forward(model, x)
    _, g = losses.batch_loss(spec, out.logits, y, k, targets, present)
    return f, backward(model, out, g).flat()


def check_network_gradients(n_configs: int = 20, seed: int = 0) -> dict[str, float]:
    """Max relative error of backward() per method over random small networks."""
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for i in range(n_configs):
        K = int(rng.integers(2, 5))
        sizes = [int(rng.integers(2, 5)), int(rng.integers(3, 7)), int(rng.integers(3, 7)), K]
        model = init_model(sizes, seed=int(rng.integers(1 << 31)))
        for b in model.biases:
            b[...] = rng.normal(0, 0.1, size=b.shape)
        B = int(rng.integers(1, 7))
        x = rng.normal(size=(B, sizes[0]))
        y = rng.integers(0, K, size=B)
        present = rng.random(B) < 0.6
        targets = rng.dirichlet(np.ones(K), size=B)
        specs = {
            "std": LossSpec("std"),
            "fer": LossSpec("fer", tau=float(rng.choice([1.0, 5.0])), total_epochs=10),
            "lsr": LossSpec("lsr", epsilon=0.1),
            "maxent": LossSpec("maxent", lam=0.5),
        }
        for name, spec in specs.items():
            f, g = network_loss_fn(model, x, y, spec, k=int(rng.integers(0, 11)), targets=targets, present=present)
            err = finite_diff_check(f, g, _flatten(model), H)
            worst[name] = max(worst.get(name, 0.0), err)
    return worst


def run_all(n_points: int = 50, n_configs: int = 20, seed: int = 0) -> dict[str, float]:
    out = {f"logits/{k}": v for k, v in check_loss_gradients(n_points, seed).items()}
    out.update({f"network/{k}": v for k, v in check_network_gradients(n_configs, seed).items()})
    return out

"""Stable softmax / log-softmax / divergence primitives and a gradient checker.

Every function accepts a single vector of shape ``(K,)`` or a batch of shape
``(B, K)``; reductions run over the last axis. All math is float64.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericError, ShapeError

EPS_NUM = 1e-12


def _check_logits(logits, tau: float) -> np.ndarray:
    if not tau > 0:
        raise ValueError(f"temperature must be positive, got {tau!r}")
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim not in (1, 2) or z.shape[-1] < 1:
        raise ShapeError(f"logits must have shape (K,) or (B, K), got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits contain non-finite values")
    return z


def softmax_temp(logits, tau: float = 1.0) -> np.ndarray:
    """Softmax of ``logits / tau`` using max subtraction."""
    z = _check_logits(logits, tau) / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax_temp(logits, tau: float = 1.0) -> np.ndarray:
    z = _check_logits(logits, tau) / tau
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _class_index(target_class, n_rows: int | None, K: int):
    t = np.asarray(target_class)
    if not np.issubdtype(t.dtype, np.integer):
        raise IndexError(f"class index must be an integer, got {target_class!r}")
    if n_rows is None:
        if t.ndim != 0:
            raise ShapeError("a single prediction needs a scalar class index")
    elif t.shape != (n_rows,):
        raise ShapeError(f"expected {n_rows} class indices, got shape {t.shape}")
    if np.any(t < 0) or np.any(t >= K):
        raise IndexError(f"class index out of range for K={K}: {target_class!r}")
    return t


def cross_entropy(pred, target_class):
    """``-log pred[target_class]`` with ``pred`` floored at ``EPS_NUM``."""
    p = np.asarray(pred, dtype=np.float64)
    if p.ndim == 1:
        t = _class_index(target_class, None, p.shape[0])
        return float(-np.log(max(p[t], EPS_NUM)))
    t = _class_index(target_class, p.shape[0], p.shape[1])
    picked = p[np.arange(p.shape[0]), t]
    return -np.log(np.maximum(picked, EPS_NUM))


def _xlogx_ratio(target: np.ndarray, model: np.ndarray) -> np.ndarray:
    # 0 * log(0 / q) := 0
    safe_t = np.where(target > 0, target, 1.0)
    terms = target * (np.log(safe_t) - np.log(np.maximum(model, EPS_NUM)))
    return np.where(target > 0, terms, 0.0)


def kl_divergence(target, model):
    """KL(target || model) in nats.

    Zero-probability target entries contribute nothing; model entries are
    floored at ``EPS_NUM`` before the log.
    """
    t = np.asarray(target, dtype=np.float64)
    q = np.asarray(model, dtype=np.float64)
    if t.shape != q.shape:
        raise ShapeError(f"KL arguments differ in shape: {t.shape} vs {q.shape}")
    kl = _xlogx_ratio(t, q).sum(axis=-1)
    return float(kl) if kl.ndim == 0 else kl


def entropy(p):
    p = np.asarray(p, dtype=np.float64)
    safe = np.where(p > 0, p, 1.0)
    h = -np.where(p > 0, p * np.log(safe), 0.0).sum(axis=-1)
    return float(h) if h.ndim == 0 else h


def finite_diff_check(
    fn: Callable[[np.ndarray], float],
    grad,
    point,
    h: float = 1e-5,
) -> float:
    """Compare an analytic gradient against central differences.

    Returns ``max_i |grad_i - numeric_i| / max(1, |numeric_i|)``.
    """
    x = np.array(point, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != x.shape:
        raise ShapeError(f"gradient shape {g.shape} does not match point {x.shape}")
    flat = x.reshape(-1)
    numeric = np.empty(flat.size)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = float(fn(x))
        flat[i] = orig - h
        f_minus = float(fn(x))
        flat[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"non-finite function value near coordinate {i}")
        numeric[i] = (f_plus - f_minus) / (2.0 * h)
    err = np.abs(g.reshape(-1) - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(err.max()) if err.size else 0.0

"""Training objectives and their gradients with respect to logits.

Methods:

* ``std``    cross-entropy against the one-hot label
* ``fer``    cross-entropy for samples never predicted correctly; for the
             rest ``alpha * CE + beta * KL(b_hat || softmax(z / tau))`` with
             the weights ramping linearly over training
* ``lsr``    cross-entropy against ``(1 - eps) * one_hot + eps / K``
* ``maxent`` cross-entropy minus ``lam`` times the output entropy

The batch functions operate on ``(B, K)`` logits and return per-sample values
and per-sample gradients; the per-sample wrappers return :class:`PerSampleLoss`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvariantError, ScheduleError
from .numerics import EPS_NUM, log_softmax_temp, softmax_temp

METHODS = ("std", "fer", "lsr", "maxent")


@dataclass(frozen=True)
class LossSpec:
    method: str = "std"
    tau: float = 5.0
    mu: float = 1.0
    epsilon: float = 0.1
    lam: float = 0.5
    total_epochs: int = 100
    rho: float = 0.9
    no_gate: bool = False
    no_average: bool = False
    noisy_mode: bool = False
    kl_tau_squared: bool = False
    kl_model_first: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.lam < 0:
            raise ConfigError(f"lam must be non-negative, got {self.lam}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        if self.mu < 0:
            raise ConfigError(f"mu must be non-negative, got {self.mu}")
        if self.total_epochs < 1:
            raise ConfigError(f"total_epochs must be >= 1, got {self.total_epochs}")

    @property
    def gated(self) -> bool:
        """Whether the regularizer is restricted to ever-correct samples."""
        return not (self.no_gate or self.noisy_mode)


@dataclass
class PerSampleLoss:
    value: float
    grad: np.ndarray
    ce: float
    kl: float = 0.0


def alpha_beta(k: int, M: int, rho: float = 0.9) -> tuple[float, float]:
    """Linear ramp: ``alpha = 1 - rho * k / M``, ``beta = rho * k / M``."""
    if M < 1:
        raise ScheduleError(f"total epochs must be >= 1, got {M}")
    if not 0 <= k <= M:
        raise ScheduleError(f"epoch {k} outside [0, {M}]")
    beta = rho * k / M
    return 1.0 - beta, beta


def _one_hot(labels: np.ndarray, K: int) -> np.ndarray:
    y = np.zeros((labels.size, K))
    y[np.arange(labels.size), labels] = 1.0
    return y


def _prep(logits, labels):
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"batch logits must be 2-D, got shape {z.shape}")
    y = np.asarray(labels)
    if y.shape != (z.shape[0],):
        raise ValueError(f"expected {z.shape[0]} labels, got shape {y.shape}")
    if y.size and (y.min() < 0 or y.max() >= z.shape[1]):
        raise IndexError(f"class index out of range for K={z.shape[1]}")
    return z, y


def std_batch(logits, labels):
    """Per-sample cross-entropy values and ``softmax - one_hot`` gradients."""
    z, y = _prep(logits, labels)
    logp = log_softmax_temp(z, 1.0)
    rows = np.arange(z.shape[0])
    value = -np.maximum(logp[rows, y], np.log(EPS_NUM))
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    return value, grad


def kl_batch(logits, targets, tau: float, model_first: bool = False):
    """KL between stored targets and ``softmax(z / tau)``; targets are constants.

    Default orientation is KL(target || model). ``model_first`` evaluates
    KL(model || target) instead, with target entries floored at ``EPS_NUM``.
    """
    z = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    q = softmax_temp(z, tau)
    logq = log_softmax_temp(z, tau)
    if not model_first:
        safe_t = np.where(t > 0, t, 1.0)
        terms = np.where(t > 0, t * (np.log(safe_t) - np.maximum(logq, np.log(EPS_NUM))), 0.0)
        return terms.sum(axis=1), (q - t) / tau
    log_t = np.log(np.maximum(t, EPS_NUM))
    gap = logq - log_t
    value = (q * gap).sum(axis=1)
    grad = q * (gap - value[:, None]) / tau
    return value, grad


def _check_targets(targets: np.ndarray) -> None:
    if targets.size == 0:
        return
    if not np.all(np.isfinite(targets)) or targets.min() < 0:
        raise InvariantError("regularization target is not a valid distribution")
    if np.max(np.abs(targets.sum(axis=1) - 1.0)) > 1e-9:
        raise InvariantError("regularization target does not sum to 1")


def fer_batch(logits, labels, targets, present, k: int, spec: LossSpec, weights=None):
    """Gated composite loss.

    Rows with ``present`` False get plain cross-entropy, bit-for-bit identical
    to :func:`std_batch`. Rows with a target get ``alpha * CE + beta * KL``.
    ``weights`` overrides the ``(alpha, beta)`` schedule when given.

    Returns ``(values, grads, ce, kl)``.
    """
    z, y = _prep(logits, labels)
    present = np.asarray(present, dtype=bool).reshape(z.shape[0])
    ce, ce_grad = std_batch(z, y)
    value, grad = ce.copy(), ce_grad.copy()
    kl = np.zeros(z.shape[0])
    if not present.any():
        return value, grad, ce, kl
    t = np.asarray(targets, dtype=np.float64)[present]
    _check_targets(t)
    alpha, beta = weights if weights is not None else alpha_beta(k, spec.total_epochs, spec.rho)
    kl_val, kl_grad = kl_batch(z[present], t, spec.tau, spec.kl_model_first)
    if spec.kl_tau_squared:
        kl_val, kl_grad = kl_val * spec.tau**2, kl_grad * spec.tau**2
    kl[present] = kl_val
    value[present] = alpha * ce[present] + beta * kl_val
    grad[present] = alpha * ce_grad[present] + beta * kl_grad
    return value, grad, ce, kl


def lsr_batch(logits, labels, epsilon: float):
    z, y = _prep(logits, labels)
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    K = z.shape[1]
    target = (1.0 - epsilon) * _one_hot(y, K) + epsilon / K
    logp = log_softmax_temp(z, 1.0)
    value = -(target * np.maximum(logp, np.log(EPS_NUM))).sum(axis=1)
    return value, np.exp(logp) - target


def maxent_batch(logits, labels, lam: float):
    """``CE - lam * H(softmax(z))``; gradient of ``-H`` is ``p * (log p + H)``."""
    z, y = _prep(logits, labels)
    if lam < 0:
        raise ValueError(f"lam must be non-negative, got {lam}")
    ce, grad = std_batch(z, y)
    logp = log_softmax_temp(z, 1.0)
    p = np.exp(logp)
    h = -(p * logp).sum(axis=1)
    return ce - lam * h, grad + lam * p * (logp + h[:, None])


def batch_loss(spec: LossSpec, logits, labels, k: int, targets=None, present=None):
    """Dispatch on ``spec.method``; returns per-sample ``(values, grads)``."""
    if spec.method == "std":
        return std_batch(logits, labels)
    if spec.method == "lsr":
        return lsr_batch(logits, labels, spec.epsilon)
    if spec.method == "maxent":
        return maxent_batch(logits, labels, spec.lam)
    n = np.asarray(logits).shape[0]
    if present is None:
        present = np.zeros(n, dtype=bool)
    values, grads, _, _ = fer_batch(logits, labels, targets, present, k, spec)
    return values, grads


# -- single-sample forms -------------------------------------------------------


def _row(logits) -> np.ndarray:
    return np.asarray(logits, dtype=np.float64).reshape(1, -1)


def std_loss(logits, true_class: int) -> PerSampleLoss:
    v, g = std_batch(_row(logits), [true_class])
    return PerSampleLoss(float(v[0]), g[0], float(v[0]))


def fer_loss(logits, true_class: int, target, k: int, spec: LossSpec, weights=None) -> PerSampleLoss:
    z = _row(logits)
    if target is None:
        present, t = [False], np.full_like(z, np.nan)
    else:
        present, t = [True], np.asarray(target, dtype=np.float64).reshape(1, -1)
    v, g, ce, kl = fer_batch(z, [true_class], t, present, k, spec, weights)
    return PerSampleLoss(float(v[0]), g[0], float(ce[0]), float(kl[0]))


def lsr_loss(logits, true_class: int, epsilon: float = 0.1, K: int | None = None) -> PerSampleLoss:
    z = _row(logits)
    if K is not None and K != z.shape[1]:
        raise ValueError(f"K={K} does not match logits width {z.shape[1]}")
    v, g = lsr_batch(z, [true_class], epsilon)
    return PerSampleLoss(float(v[0]), g[0], float(v[0]))


def lsr_target(true_class: int, epsilon: float, K: int) -> np.ndarray:
    return (1.0 - epsilon) * _one_hot(np.array([true_class]), K)[0] + epsilon / K


def maxent_loss(logits, true_class: int, lam: float = 0.5) -> PerSampleLoss:
    v, g = maxent_batch(_row(logits), [true_class], lam)
    ce, _ = std_batch(_row(logits), [true_class])
    return PerSampleLoss(float(v[0]), g[0], float(ce[0]))

"""Per-sample record of past correct behaviors.

For each training sample the memory keeps whether it was ever predicted
correctly and a running average ``b_hat`` of its tempered output
distributions from the epochs where it was. A new behavior ``b`` with
ground-truth confidence ``c`` is folded in as::

    b_hat <- exp(-mu * c) * b_hat + (1 - exp(-mu * c)) * b

The first recorded behavior initializes ``b_hat`` directly.
"""
from __future__ import annotations

import numpy as np

from .errors import ModeError, ParseError
from .numerics import softmax_temp

SNAPSHOT_MAGIC = b"FERBMEM\x00"
SNAPSHOT_VERSION = 1
# header: magic(8) version(u16) flags(u16) n(u64) K(u32) tau(f64) mu(f64), little-endian
_HEADER = np.dtype(
    [
        ("magic", "S8"),
        ("version", "<u2"),
        ("flags", "<u2"),
        ("n", "<u8"),
        ("K", "<u4"),
        ("tau", "<f8"),
        ("mu", "<f8"),
    ]
)
_FLAG_UNCONDITIONAL = 1
_FLAG_SINGLE = 2


def _entry_dtype(K: int) -> np.dtype:
    return np.dtype(
        [("ever_correct", "u1"), ("count", "<u4"), ("epoch", "<i4"), ("b_hat", "<f8", (K,))]
    )


class BehaviorMemory:
    """Host-side arrays: ``n x K`` averages plus per-sample flags and counters.

    ``unconditional`` allows :meth:`observe_unconditional` (noisy-label mode and
    the no-gating ablation). ``average=False`` keeps only the most recent
    behavior instead of the running average.
    """

    def __init__(
        self,
        n: int,
        K: int,
        mu: float = 1.0,
        tau: float = 5.0,
        unconditional: bool = False,
        average: bool = True,
    ):
        if n < 0 or K < 1:
            raise ValueError(f"invalid memory size n={n}, K={K}")
        if not tau > 0:
            raise ValueError(f"temperature must be positive, got {tau}")
        if mu < 0:
            raise ValueError(f"mu must be non-negative, got {mu}")
        self.n, self.K = int(n), int(K)
        self.mu, self.tau = float(mu), float(tau)
        self.unconditional = unconditional
        self.average = average
        self.ever_correct = np.zeros(self.n, dtype=bool)
        self.correct_count = np.zeros(self.n, dtype=np.int64)
        self.last_update_epoch = np.full(self.n, -1, dtype=np.int64)
        self.b_hat = np.full((self.n, self.K), np.nan)

    def __len__(self) -> int:
        return self.n

    def _ids(self, sample_ids) -> np.ndarray:
        ids = np.atleast_1d(np.asarray(sample_ids))
        if not np.issubdtype(ids.dtype, np.integer):
            raise IndexError(f"sample ids must be integers, got {ids.dtype}")
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise IndexError(f"sample id out of range [0, {self.n})")
        return ids

    def _fold(self, ids, logits, true_classes, epoch, gate: bool) -> np.ndarray:
        ids = self._ids(ids)
        z = np.asarray(logits, dtype=np.float64).reshape(ids.size, self.K)
        y = np.asarray(true_classes).reshape(ids.size)
        if epoch < 0:
            raise ValueError(f"epoch must be non-negative, got {epoch}")
        if len(np.unique(ids)) != ids.size:
            raise ValueError("duplicate sample ids in one update")
        take = np.argmax(z, axis=1) == y if gate else np.ones(ids.size, dtype=bool)
        if not take.any():
            return take
        ids, z, y = ids[take], z[take], y[take]
        behavior = softmax_temp(z, self.tau)
        conf = softmax_temp(z, 1.0)[np.arange(ids.size), y]
        keep = np.exp(-self.mu * conf)[:, None]
        first = ~self.ever_correct[ids]
        prior = self.b_hat[ids]
        if self.average:
            blended = keep * prior + (1.0 - keep) * behavior
            self.b_hat[ids] = np.where(first[:, None], behavior, blended)
        else:
            self.b_hat[ids] = behavior
        self.ever_correct[ids] = True
        self.correct_count[ids] += 1
        self.last_update_epoch[ids] = epoch
        return take

    def observe(self, sample_id, logits, true_class, epoch: int) -> bool:
        """Fold one sample's behavior in if its prediction is correct.

        Prediction ties resolve to the lowest class index. Returns whether the
        entry was updated.
        """
        return bool(self._fold([sample_id], logits, [true_class], epoch, gate=True)[0])

    def observe_batch(self, sample_ids, logits, true_classes, epoch: int) -> np.ndarray:
        """Vectorized :meth:`observe`; returns the per-row "updated" mask."""
        return self._fold(sample_ids, logits, true_classes, epoch, gate=True)

    def observe_unconditional(self, sample_id, logits, true_class, epoch: int) -> None:
        self.observe_unconditional_batch([sample_id], logits, [true_class], epoch)

    def observe_unconditional_batch(self, sample_ids, logits, true_classes, epoch: int):
        if not self.unconditional:
            raise ModeError("unconditional updates require noisy / ungated mode")
        return self._fold(sample_ids, logits, true_classes, epoch, gate=False)

    def target_for(self, sample_id):
        """Detached copy of the stored average, or None if never recorded."""
        i = int(self._ids([sample_id])[0])
        if not self.ever_correct[i]:
            return None
        return self.b_hat[i].copy()

    def targets_for(self, sample_ids):
        """Batch lookup: ``(present_mask, targets)`` with absent rows set to NaN."""
        ids = self._ids(sample_ids)
        return self.ever_correct[ids].copy(), self.b_hat[ids].copy()

    # -- serialization -------------------------------------------------------

    def snapshot(self) -> bytes:
        header = np.zeros((), dtype=_HEADER)
        header["magic"] = SNAPSHOT_MAGIC
        header["version"] = SNAPSHOT_VERSION
        header["flags"] = (_FLAG_UNCONDITIONAL if self.unconditional else 0) | (
            0 if self.average else _FLAG_SINGLE
        )
        header["n"], header["K"] = self.n, self.K
        header["tau"], header["mu"] = self.tau, self.mu
        entries = np.zeros(self.n, dtype=_entry_dtype(self.K))
        entries["ever_correct"] = self.ever_correct
        entries["count"] = self.correct_count
        entries["epoch"] = self.last_update_epoch
        entries["b_hat"] = self.b_hat
        return header.tobytes() + entries.tobytes()

    @classmethod
    def restore(cls, payload: bytes) -> "BehaviorMemory":
        if len(payload) < _HEADER.itemsize:
            raise ParseError("payload shorter than the snapshot header")
        header = np.frombuffer(payload[: _HEADER.itemsize], dtype=_HEADER)[0]
        if header["magic"] != SNAPSHOT_MAGIC.rstrip(b"\x00"):
            raise ParseError("bad snapshot magic")
        if int(header["version"]) != SNAPSHOT_VERSION:
            raise ParseError(f"unsupported snapshot version {int(header['version'])}")
        n, K = int(header["n"]), int(header["K"])
        dt = _entry_dtype(K)
        body = payload[_HEADER.itemsize :]
        if len(body) != n * dt.itemsize:
            complete = len(body) // dt.itemsize
            raise ParseError(
                f"snapshot body truncated or oversized: entry {complete} of {n} is incomplete"
                if len(body) < n * dt.itemsize
                else f"snapshot has {len(body) - n * dt.itemsize} trailing bytes after entry {n - 1}"
            )
        flags = int(header["flags"])
        mem = cls(
            n,
            K,
            mu=float(header["mu"]),
            tau=float(header["tau"]),
            unconditional=bool(flags & _FLAG_UNCONDITIONAL),
            average=not flags & _FLAG_SINGLE,
        )
        entries = np.frombuffer(body, dtype=dt)
        ever = entries["ever_correct"].astype(bool)
        b_hat = entries["b_hat"].astype(np.float64)
        for i in np.flatnonzero(ever):
            row = b_hat[i]
            if not (np.all(np.isfinite(row)) and abs(row.sum() - 1.0) < 1e-9 and row.min() >= 0):
                raise ParseError(f"entry {i}: stored average is not a distribution")
        mem.ever_correct = ever
        mem.correct_count = entries["count"].astype(np.int64)
        mem.last_update_epoch = entries["epoch"].astype(np.int64)
        mem.b_hat = b_hat
        return mem

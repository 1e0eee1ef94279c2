"""Per-epoch correctness tracking and flipping-error statistics.

A wrongly flipped sample (WFS) at epoch ``e`` is an evaluation sample that is
misclassified at ``e`` but was classified correctly at some epoch before
``e``. FE is the WFS count over all evaluation samples; RFE is the WFS count
over the misclassified samples at ``e`` (0 when nothing is misclassified).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeError

HISTORY_FORMAT = "ferlab-prediction-history"
HISTORY_VERSION = 1


def accuracy(predictions, truths) -> float:
    p, t = np.asarray(predictions), np.asarray(truths)
    if p.shape != t.shape:
        raise ShapeError(f"predictions {p.shape} and truths {t.shape} differ in shape")
    if p.size == 0:
        return 0.0
    return float(np.mean(p == t))


@dataclass(frozen=True)
class FlipReport:
    epoch: int
    n_eval: int
    n_misclassified: int
    n_wfs: int
    fe: float
    rfe: float
    accuracy: float

    def to_dict(self) -> dict:
        return asdict(self)


class PredictionHistory:
    """Correctness bits per evaluation sample and epoch, one packed column per epoch."""

    def __init__(self, n_eval: int):
        if n_eval < 0:
            raise ValueError(f"n_eval must be non-negative, got {n_eval}")
        self.n_eval = int(n_eval)
        self._columns: list[np.ndarray] = []

    @property
    def epoch_count(self) -> int:
        return len(self._columns)

    def record_epoch(self, predictions, truths) -> "PredictionHistory":
        p, t = np.asarray(predictions), np.asarray(truths)
        if p.shape != (self.n_eval,) or t.shape != (self.n_eval,):
            raise ShapeError(
                f"expected {self.n_eval} predictions and truths, got {p.shape} and {t.shape}"
            )
        self.record_correct(p == t)
        return self

    def record_correct(self, correct) -> None:
        c = np.asarray(correct, dtype=bool)
        if c.shape != (self.n_eval,):
            raise ShapeError(f"expected {self.n_eval} correctness bits, got {c.shape}")
        self._columns.append(np.packbits(c))

    def column(self, epoch: int) -> np.ndarray:
        return np.unpackbits(self._columns[epoch], count=self.n_eval).astype(bool)

    def bits(self) -> np.ndarray:
        """Dense ``(n_eval, epoch_count)`` boolean matrix."""
        if not self._columns:
            return np.zeros((self.n_eval, 0), dtype=bool)
        return np.stack([self.column(e) for e in range(self.epoch_count)], axis=1)

    def flip_report(self, at_epoch: int | None = None) -> FlipReport:
        if at_epoch is None:
            at_epoch = self.epoch_count - 1
        if not 0 <= at_epoch < self.epoch_count:
            raise IndexError(f"epoch {at_epoch} outside recorded range [0, {self.epoch_count})")
        now = self.column(at_epoch)
        before = np.zeros(self.n_eval, dtype=bool)
        for e in range(at_epoch):
            before |= self.column(e)
        wrong = ~now
        n_wrong = int(wrong.sum())
        n_wfs = int((wrong & before).sum())
        n = self.n_eval
        return FlipReport(
            epoch=at_epoch,
            n_eval=n,
            n_misclassified=n_wrong,
            n_wfs=n_wfs,
            fe=n_wfs / n if n else 0.0,
            rfe=n_wfs / n_wrong if n_wrong else 0.0,
            accuracy=(n - n_wrong) / n if n else 0.0,
        )

    # -- file format -----------------------------------------------------------
    # JSON object: {"format", "version", "n_eval", "columns": ["0110...", ...]}
    # with one '0'/'1' string per epoch, character i is sample i.

    def to_json(self) -> str:
        cols = ["".join("1" if b else "0" for b in self.column(e)) for e in range(self.epoch_count)]
        return json.dumps(
            {"format": HISTORY_FORMAT, "version": HISTORY_VERSION, "n_eval": self.n_eval, "columns": cols}
        )

    @classmethod
    def from_json(cls, text: str) -> "PredictionHistory":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"history is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != HISTORY_FORMAT:
            raise ParseError("not a prediction-history document")
        if doc.get("version") != HISTORY_VERSION:
            raise ParseError(f"unsupported history version {doc.get('version')!r}")
        hist = cls(int(doc["n_eval"]))
        for e, col in enumerate(doc.get("columns", [])):
            if len(col) != hist.n_eval or set(col) - {"0", "1"}:
                raise ParseError(f"column {e} is not a {hist.n_eval}-character bit string")
            hist.record_correct(np.array([c == "1" for c in col], dtype=bool))
        return hist

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "PredictionHistory":
        return cls.from_json(Path(path).read_text())


def flip_report(hist: PredictionHistory, at_epoch: int | None = None) -> FlipReport:
    return hist.flip_report(at_epoch)

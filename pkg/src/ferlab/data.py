"""Tabular datasets: delimited-file loading, stratified splits, standardization,
label-noise injection and Gaussian-blob generation."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, StratificationError

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    train_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    val_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    test_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    noise_mask: np.ndarray | None = None
    clean_labels: np.ndarray | None = None
    label_names: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels outside [0, n_classes)")

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def part(self, which: str):
        idx = getattr(self, f"{which}_idx")
        return self.features[idx], self.labels[idx]

    def manifest(self) -> dict:
        """Everything needed to reproduce splits and noise exactly."""
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "n_classes": self.n_classes,
            "label_names": list(self.label_names),
            "train_idx": self.train_idx.tolist(),
            "val_idx": self.val_idx.tolist(),
            "test_idx": self.test_idx.tolist(),
            "noisy_train_idx": (
                [] if self.noise_mask is None else np.flatnonzero(self.noise_mask).tolist()
            ),
        }

    def write_manifest(self, path) -> None:
        Path(path).write_text(json.dumps(self.manifest(), indent=1))


def load_delimited(
    path,
    label_column: int = -1,
    feature_columns=None,
    delimiter: str | None = ",",
    header: bool = False,
    name: str = "",
) -> Dataset:
    """Read a delimited text file; ``delimiter=None`` splits on whitespace.

    Labels are mapped to class indices in order of first appearance; the
    mapping is kept in ``label_names``. Blank lines are skipped.
    """
    path = Path(path)
    rows, labels = [], []
    names: dict[str, int] = {}
    pending_header = header
    with path.open(newline="") as fh:
        lines = csv.reader(fh, delimiter=delimiter) if delimiter else (l.split() for l in fh)
        for lineno, raw in enumerate(lines, start=1):
            cells = [c.strip() for c in raw]
            if not cells or all(c == "" for c in cells):
                continue
            if pending_header:
                pending_header = False
                continue
            try:
                label = cells[label_column]
                if feature_columns is None:
                    lc = label_column % len(cells)
                    feats = [c for j, c in enumerate(cells) if j != lc]
                else:
                    feats = [cells[j] for j in feature_columns]
                values = [float(c) for c in feats]
            except (IndexError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: malformed row ({exc})") from exc
            if rows and len(values) != len(rows[0]):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(rows[0])} features, got {len(values)}"
                )
            rows.append(values)
            labels.append(names.setdefault(label, len(names)))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return Dataset(
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        n_classes=len(names),
        label_names=tuple(names),
        name=name or path.stem,
    )


def load_iris() -> Dataset:
    """The 150-sample Iris data bundled with the package."""
    ref = resources.files("ferlab.datasets").joinpath("iris.data")
    with resources.as_file(ref) as p:
        return load_delimited(p, name="iris")


def load_arcene(directory) -> Dataset:
    """Arcene from the published ``arcene_{train,valid}.{data,labels}`` files.

    The published training part becomes ``train`` and the validation part
    becomes ``test``; ``val`` is left empty.
    """
    directory = Path(directory)
    parts = {}
    for part in ("train", "valid"):
        data_path = directory / f"arcene_{part}.data"
        label_path = directory / f"arcene_{part}.labels"
        for p in (data_path, label_path):
            if not p.exists():
                raise FileNotFoundError(f"missing Arcene file {p}")
        try:
            x = np.loadtxt(data_path, dtype=np.float64)
            y = np.loadtxt(label_path, dtype=np.int64)
        except ValueError as exc:
            raise ParseError(f"{directory}: {exc}") from exc
        if x.shape[0] != y.shape[0]:
            raise ParseError(f"{data_path}: {x.shape[0]} rows but {y.shape[0]} labels")
        parts[part] = (x, (y > 0).astype(np.int64))
    (xtr, ytr), (xte, yte) = parts["train"], parts["valid"]
    n_tr = ytr.size
    return Dataset(
        features=np.vstack([xtr, xte]),
        labels=np.concatenate([ytr, yte]),
        n_classes=2,
        train_idx=np.arange(n_tr),
        test_idx=np.arange(n_tr, n_tr + yte.size),
        label_names=("-1", "1"),
        name="arcene",
    )


def split(ds: Dataset, fractions=(0.6, 0.2, 0.2), seed: int = 0, indices=None) -> Dataset:
    """Stratified shuffled train/val/test split.

    Per class with ``n_c`` samples, the shuffled members are cut at
    ``round_half_up(n_c * cumulative_fraction)``. So 50 samples per class at
    60/20/20 give 30/10/10. ``indices`` may instead give explicit
    ``(train, val, test)`` index lists.
    """
    if indices is not None:
        tr, va, te = (np.asarray(i, dtype=np.int64) for i in indices)
        allidx = np.concatenate([tr, va, te])
        if np.unique(allidx).size != allidx.size:
            raise ValueError("explicit split indices overlap")
        return replace(ds, train_idx=tr, val_idx=va, test_idx=te)
    f = np.asarray(fractions, dtype=np.float64)
    if f.shape != (3,) or np.any(f < 0) or abs(f.sum() - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three non-negative numbers summing to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    cuts = np.cumsum(f)
    parts = ([], [], [])
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        needed = int((f > 0).sum())
        if members.size < needed:
            raise StratificationError(
                f"class {c} has {members.size} samples, fewer than {needed} non-empty split parts"
            )
        members = rng.permutation(members)
        bounds = np.floor(members.size * cuts + 0.5).astype(int)
        bounds[-1] = members.size
        start = 0
        for k, stop in enumerate(bounds):
            parts[k].append(members[start:stop])
            start = stop
    tr, va, te = (np.sort(np.concatenate(p)) if p else np.zeros(0, np.int64) for p in parts)
    return replace(ds, train_idx=tr.astype(np.int64), val_idx=va.astype(np.int64), test_idx=te.astype(np.int64))


def standardize(ds: Dataset) -> Dataset:
    """Scale every row with the train split's per-feature mean and std."""
    if ds.train_idx.size == 0:
        raise ValueError("standardize needs a non-empty train split")
    xtr = ds.features[ds.train_idx]
    mean = xtr.mean(axis=0)
    std = np.maximum(xtr.std(axis=0), STD_FLOOR)
    return replace(ds, features=(ds.features - mean) / std)


@dataclass(frozen=True)
class NoiseSpec:
    rate: float = 0.0
    seed: int = 0
    exclude_true: bool = False

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"noise rate must lie in [0, 1], got {self.rate}")


def inject_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    """Redraw the labels of ``floor(rate * n_train)`` training samples.

    The selected samples (uniform, without replacement) get a label drawn
    uniformly over all classes, so some keep their original label. With
    ``exclude_true`` the draw is over the other ``K - 1`` classes instead.
    Validation and test labels are never touched.
    """
    n_sel = int(np.floor(spec.rate * ds.train_idx.size))
    mask = np.zeros(ds.n, dtype=bool)
    if n_sel == 0:
        return replace(ds, noise_mask=mask, clean_labels=ds.labels.copy())
    rng = np.random.default_rng(spec.seed)
    chosen = rng.choice(ds.train_idx, size=n_sel, replace=False)
    labels = ds.labels.copy()
    if spec.exclude_true:
        offset = rng.integers(1, ds.n_classes, size=n_sel)
        labels[chosen] = (labels[chosen] + offset) % ds.n_classes
    else:
        labels[chosen] = rng.integers(0, ds.n_classes, size=n_sel)
    mask[chosen] = True
    clean = ds.labels.copy() if ds.clean_labels is None else ds.clean_labels
    return replace(ds, labels=labels, noise_mask=mask, clean_labels=clean)


def blob_centers(K: int, d: int, separation: float) -> np.ndarray:
    """Class means with nearest-neighbour distance ``separation``.

    With ``d >= K`` the means are scaled basis vectors (all pairs equidistant);
    otherwise a regular polygon in the first two coordinates, or evenly spaced
    points on a line when ``d == 1``.
    """
    centers = np.zeros((K, d))
    if d >= K:
        centers[np.arange(K), np.arange(K)] = separation / np.sqrt(2.0)
    elif d >= 2:
        angles = 2 * np.pi * np.arange(K) / K
        radius = separation / (2 * np.sin(np.pi / K)) if K > 1 else 0.0
        centers[:, 0], centers[:, 1] = radius * np.cos(angles), radius * np.sin(angles)
    else:
        centers[:, 0] = separation * np.arange(K)
    return centers


def make_blobs(K: int, per_class: int, d: int, separation: float, seed: int = 0) -> Dataset:
    if K < 1 or per_class < 1 or d < 1 or separation < 0:
        raise ValueError("make_blobs needs positive K, per_class, d and non-negative separation")
    rng = np.random.default_rng(seed)
    centers = blob_centers(K, d, separation)
    labels = np.repeat(np.arange(K), per_class)
    features = centers[labels] + rng.standard_normal((labels.size, d))
    return Dataset(
        features=features,
        labels=labels.astype(np.int64),
        n_classes=K,
        label_names=tuple(str(c) for c in range(K)),
        name=f"blobs-K{K}-d{d}-sep{separation:g}",
    )


def write_delimited(ds: Dataset, path, delimiter: str = ",") -> None:
    """Inverse of :func:`load_delimited` (label in the last column)."""
    names = ds.label_names or tuple(str(c) for c in range(ds.n_classes))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        for x, y in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [names[y]])

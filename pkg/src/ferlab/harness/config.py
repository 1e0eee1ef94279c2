"""Experiment configuration: a flat TOML table of ``key = value`` pairs.

Unknown keys are rejected. Relative ``output_dir`` values are resolved under
``$FERLAB_OUTPUT_ROOT`` when that variable is set.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

from ..errors import ConfigError
from ..losses import METHODS, LossSpec

OUTPUT_ROOT_ENV = "FERLAB_OUTPUT_ROOT"
DATASETS = ("iris", "blobs", "arcene", "delimited")
CAPTURE_MODES = ("train-pass", "eval-pass")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    # data
    dataset: str = "iris"
    data_path: str = ""
    delimiter: str = ","
    label_column: int = -1
    header: bool = False
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    standardize: bool = True
    blobs_classes: int = 4
    blobs_per_class: int = 100
    blobs_dim: int = 4
    blobs_separation: float = 2.0
    blobs_seed: int = 0
    noise_rate: float = 0.0
    noise_seed: int = -1  # -1: reuse the run seed
    noise_exclude_true: bool = False
    # objective
    method: str = "std"
    tau: float = 5.0
    mu: float = 1.0
    epsilon: float = 0.1
    lam: float = 0.5
    rho: float = 0.9
    no_gate: bool = False
    no_average: bool = False
    noisy_mode: bool = False
    kl_tau_squared: bool = False
    kl_model_first: bool = False
    behavior_capture: str = "train-pass"
    # model / optimizer
    hidden: tuple[int, ...] = (128, 128)
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    lr_milestones: tuple[float, ...] = (0.5, 0.75)
    lr_gamma: float = 0.1
    epochs: int = 100
    batch_size: int = 32
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    # output
    output_dir: str = ""

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.behavior_capture not in CAPTURE_MODES:
            raise ConfigError(f"behavior_capture must be one of {CAPTURE_MODES}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError("noise_rate must lie in [0, 1]")
        if any(not 0.0 < m < 1.0 for m in self.lr_milestones):
            raise ConfigError("lr_milestones are fractions of training in (0, 1)")
        if len(self.split) != 3 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split must be three fractions summing to 1, got {self.split}")
        self.loss_spec()  # validates objective hyperparameters

    def validate_paths(self) -> None:
        if self.dataset in ("arcene", "delimited"):
            if not self.data_path:
                raise ConfigError(f"dataset {self.dataset!r} requires data_path")
            if not Path(self.data_path).exists():
                raise ConfigError(f"data_path does not exist: {self.data_path}")

    def loss_spec(self) -> LossSpec:
        try:
            return LossSpec(
                method=self.method,
                tau=self.tau,
                mu=self.mu,
                epsilon=self.epsilon,
                lam=self.lam,
                total_epochs=self.epochs,
                rho=self.rho,
                no_gate=self.no_gate,
                no_average=self.no_average,
                noisy_mode=self.noisy_mode,
                kl_tau_squared=self.kl_tau_squared,
                kl_model_first=self.kl_model_first,
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def lr_at(self, epoch: int) -> float:
        drops = sum(epoch >= round(m * self.epochs) for m in self.lr_milestones)
        return self.lr * self.lr_gamma**drops

    def resolved_output_dir(self) -> Path | None:
        if not self.output_dir:
            return None
        out = Path(self.output_dir)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not out.is_absolute():
            out = Path(root) / out
        return out

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in fields(self)}


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


_TUPLE_FIELDS = {f.name for f in fields(ExperimentConfig) if str(f.type).startswith("tuple")}


def config_from_dict(raw: dict) -> ExperimentConfig:
    known = {f.name: f for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {}
    for key, v in raw.items():
        if isinstance(v, dict):
            raise ConfigError(f"config must be flat; key {key!r} holds a table")
        if key in _TUPLE_FIELDS:
            if not isinstance(v, (list, tuple)):
                raise ConfigError(f"{key} must be a list")
            v = tuple(v)
        else:
            default = known[key].default
            if isinstance(default, bool) and not isinstance(v, bool):
                raise ConfigError(f"{key} must be true/false")
            if isinstance(default, float) and isinstance(v, int) and not isinstance(v, bool):
                v = float(v)
            if type(default) is not type(v):
                raise ConfigError(f"{key} expects {type(default).__name__}, got {type(v).__name__}")
        values[key] = v
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = config_from_dict(raw)
    if cfg.data_path and not Path(cfg.data_path).is_absolute():
        cfg = cfg.with_(data_path=str((path.parent / cfg.data_path).resolve()))
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, v in cfg.to_dict().items():
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, str):
            s = '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
        elif isinstance(v, list):
            s = "[" + ", ".join(repr(x) for x in v) + "]"
        else:
            s = repr(v)
        lines.append(f"{key} = {s}")
    return "\n".join(lines) + "\n"

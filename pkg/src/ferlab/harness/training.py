"""Training loop wiring the model, objectives, behavior memory and flip metrics."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..behavior_memory import BehaviorMemory
from ..data import Dataset, NoiseSpec, inject_noise, load_arcene, load_delimited, load_iris, make_blobs, split, standardize
from ..errors import ConfigError, NumericError, PairingError
from ..losses import alpha_beta, batch_loss
from ..metrics import FlipReport, PredictionHistory, accuracy
from ..model import MlpModel, OptimizerState, backward, forward, init_model, save_checkpoint, sgd_step
from .config import ExperimentConfig, dump_config

log = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    seed: int
    epoch: int
    lr: float
    train_loss: float
    train_accuracy: float
    val_accuracy: float
    eval_accuracy: float
    fe: float
    rfe: float
    wfs_count: int
    n_misclassified: int
    alpha: float
    beta: float
    lcor_count: int
    ever_correct_at_batch: int
    wall_time: float

    def stream_fields(self) -> dict:
        """Record without wall-clock time; identical across reruns."""
        d = asdict(self)
        d.pop("wall_time")
        return d


@dataclass
class RunResult:
    seed: int
    records: list[EpochRecord]
    history: PredictionHistory
    memory: BehaviorMemory | None
    model: MlpModel
    dataset: Dataset
    final_report: FlipReport
    best_epoch: int | None
    best_report: FlipReport | None

    @property
    def final_accuracy(self) -> float:
        return self.final_report.accuracy

    @property
    def peak_accuracy(self) -> float:
        return max(r.eval_accuracy for r in self.records)

    @property
    def best_accuracy(self) -> float | None:
        return None if self.best_report is None else self.best_report.accuracy


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunResult] = field(default_factory=list)

    def per_seed(self, metric: str) -> np.ndarray:
        getters = {
            "final_accuracy": lambda r: r.final_accuracy,
            "best_accuracy": lambda r: r.best_accuracy,
            "peak_accuracy": lambda r: r.peak_accuracy,
            "fe": lambda r: r.final_report.fe,
            "rfe": lambda r: r.final_report.rfe,
            "best_fe": lambda r: None if r.best_report is None else r.best_report.fe,
            "best_rfe": lambda r: None if r.best_report is None else r.best_report.rfe,
        }
        vals = [getters[metric](r) for r in self.runs]
        return np.array([np.nan if v is None else v for v in vals], dtype=np.float64)

    def summary_rows(self) -> list[dict]:
        rows = []
        for metric in ("final_accuracy", "best_accuracy", "peak_accuracy", "fe", "rfe", "best_fe", "best_rfe"):
            vals = self.per_seed(metric)
            rows.append(
                {
                    "name": self.config.name,
                    "method": self.config.method,
                    "metric": metric,
                    "mean": float(np.mean(vals)),
                    "std": float(np.std(vals)),
                    "per_seed": " ".join(f"{v:.6f}" for v in vals),
                }
            )
        return rows


def prepare_dataset(cfg: ExperimentConfig, seed: int) -> Dataset:
    """Load, split, optionally corrupt and standardize the data for one run."""
    if cfg.dataset == "iris":
        ds = split(load_iris(), cfg.split, seed)
    elif cfg.dataset == "blobs":
        ds = make_blobs(cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim, cfg.blobs_separation, cfg.blobs_seed)
        ds = split(ds, cfg.split, seed)
    elif cfg.dataset == "arcene":
        ds = load_arcene(cfg.data_path)
    else:
        raw = load_delimited(cfg.data_path, cfg.label_column, delimiter=cfg.delimiter or None, header=cfg.header)
        ds = split(raw, cfg.split, seed)
    if cfg.noise_rate > 0:
        noise_seed = seed if cfg.noise_seed < 0 else cfg.noise_seed
        ds = inject_noise(ds, NoiseSpec(cfg.noise_rate, noise_seed, cfg.noise_exclude_true))
    if cfg.standardize:
        ds = standardize(ds)
    return ds


def _eval_predictions(model: MlpModel, x: np.ndarray) -> np.ndarray:
    if x.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmax(forward(model, x).logits, axis=1)


def run_seed(cfg: ExperimentConfig, seed: int, ds: Dataset | None = None) -> RunResult:
    """Train one model; returns per-epoch records and end-of-run reports."""
    if ds is None:
        ds = prepare_dataset(cfg, seed)
    spec = cfg.loss_spec()
    x_tr, y_tr = ds.part("train")
    x_va, y_va = ds.part("val")
    x_te, y_te = ds.part("test")
    n_tr, K = y_tr.size, ds.n_classes
    if n_tr == 0:
        raise ConfigError("training split is empty")

    model = init_model([ds.d, *cfg.hidden, K], seed)
    opt = OptimizerState.for_model(model, cfg.lr, cfg.momentum, cfg.weight_decay)
    memory = None
    if spec.method == "fer":
        memory = BehaviorMemory(
            n_tr, K, mu=spec.mu, tau=spec.tau, unconditional=not spec.gated, average=not spec.no_average
        )
    history = PredictionHistory(y_te.size)
    records: list[EpochRecord] = []
    val_acc_by_epoch: list[float] = []

    for k in range(cfg.epochs):
        t0 = time.perf_counter()
        opt.lr = cfg.lr_at(k)
        alpha, beta = alpha_beta(k, cfg.epochs, spec.rho) if spec.method == "fer" else (1.0, 0.0)
        order = np.random.default_rng([seed, k]).permutation(n_tr)
        loss_sum, n_correct, lcor_count, ever_count = 0.0, 0, 0, 0
        for b, start in enumerate(range(0, n_tr, cfg.batch_size)):
            ids = order[start : start + cfg.batch_size]
            xb, yb = x_tr[ids], y_tr[ids]
            out = forward(model, xb)
            present = targets = None
            if memory is not None:
                present, targets = memory.targets_for(ids)
                lcor_count += int(present.sum())
                ever_count += int(memory.ever_correct[ids].sum())
            values, grads = batch_loss(spec, out.logits, yb, k, targets, present)
            if not (np.all(np.isfinite(values)) and np.all(np.isfinite(grads))):
                raise NumericError(f"non-finite loss at seed {seed}, epoch {k}, batch {b}")
            loss_sum += float(values.sum())
            n_correct += int((np.argmax(out.logits, axis=1) == yb).sum())
            if memory is not None and cfg.behavior_capture == "train-pass":
                _observe(memory, ids, out.logits, yb, k)
            sgd_step(model, opt, backward(model, out, grads))

        if memory is not None and cfg.behavior_capture == "eval-pass":
            _observe(memory, np.arange(n_tr), forward(model, x_tr).logits, y_tr, k)

        test_pred = _eval_predictions(model, x_te)
        history.record_epoch(test_pred, y_te)
        report = history.flip_report(k)
        val_acc = accuracy(_eval_predictions(model, x_va), y_va) if y_va.size else float("nan")
        val_acc_by_epoch.append(val_acc)
        records.append(
            EpochRecord(
                seed=seed,
                epoch=k,
                lr=opt.lr,
                train_loss=loss_sum / n_tr,
                train_accuracy=n_correct / n_tr,
                val_accuracy=val_acc,
                eval_accuracy=report.accuracy,
                fe=report.fe,
                rfe=report.rfe,
                wfs_count=report.n_wfs,
                n_misclassified=report.n_misclassified,
                alpha=alpha,
                beta=beta,
                lcor_count=lcor_count,
                ever_correct_at_batch=ever_count,
                wall_time=time.perf_counter() - t0,
            )
        )

    best_epoch = best_report = None
    if y_va.size:
        best_epoch = int(np.argmax(val_acc_by_epoch))  # first maximum: ties go to the earlier epoch
        best_report = history.flip_report(best_epoch)
    return RunResult(seed, records, history, memory, model, ds, history.flip_report(), best_epoch, best_report)


def _observe(memory: BehaviorMemory, ids, logits, labels, epoch: int) -> None:
    if memory.unconditional:
        memory.observe_unconditional_batch(ids, logits, labels, epoch)
    else:
        memory.observe_batch(ids, logits, labels, epoch)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every seed; write artifacts when ``write`` and ``output_dir`` are set."""
    cfg.validate_paths()
    result = ExperimentResult(cfg)
    out = cfg.resolved_output_dir() if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.toml").write_text(dump_config(cfg))
        stream = (out / "metrics.jsonl").open("w")
    else:
        stream = None
    try:
        for seed in cfg.seeds:
            run = run_seed(cfg, seed)
            result.runs.append(run)
            log.info("%s seed=%d final acc=%.4f fe=%.4f", cfg.name, seed, run.final_accuracy, run.final_report.fe)
            if out is not None:
                for rec in run.records:
                    stream.write(json.dumps({"name": cfg.name, "method": cfg.method, **asdict(rec)}) + "\n")
                stream.flush()
                write_run_artifacts(run, out / f"seed{seed}")
    finally:
        if stream is not None:
            stream.close()
    if out is not None:
        (out / "summary.csv").write_text(summary_csv(result.summary_rows()))
    return result


def write_run_artifacts(run: RunResult, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    run.history.save(directory / "history.json")
    run.dataset.write_manifest(directory / "dataset.json")
    save_checkpoint(run.model, directory / "model.npz")
    if run.memory is not None:
        (directory / "memory.bin").write_bytes(run.memory.snapshot())
    reports = {
        "final": run.final_report.to_dict(),
        "best_epoch": run.best_epoch,
        "best": None if run.best_report is None else run.best_report.to_dict(),
    }
    (directory / "reports.json").write_text(json.dumps(reports, indent=1))


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["name", "method", "metric", "mean", "std", "per_seed"])
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# -- paired comparison -----------------------------------------------------------

_DATA_KEYS = (
    "dataset", "data_path", "delimiter", "label_column", "header", "split", "standardize",
    "blobs_classes", "blobs_per_class", "blobs_dim", "blobs_separation", "blobs_seed",
    "noise_rate", "noise_seed", "noise_exclude_true", "seeds",
)


@dataclass
class ComparisonRow:
    name: str
    method: str
    accuracy: np.ndarray
    fe: np.ndarray
    rfe: np.ndarray
    delta: np.ndarray  # paired accuracy difference vs. the first config

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "method": self.method,
            "acc_mean": float(self.accuracy.mean()),
            "acc_std": float(self.accuracy.std()),
            "delta_mean": float(self.delta.mean()),
            "delta_std": float(self.delta.std()),
            "fe_mean": float(self.fe.mean()),
            "rfe_mean": float(self.rfe.mean()),
            "per_seed": " ".join(f"{v:.4f}" for v in self.accuracy),
        }


def check_pairing(cfgs) -> None:
    base = cfgs[0].to_dict()
    for cfg in cfgs[1:]:
        other = cfg.to_dict()
        diff = [k for k in _DATA_KEYS if base[k] != other[k]]
        if diff:
            raise PairingError(f"{cfg.name} differs from {cfgs[0].name} in {', '.join(diff)}")


def compare(cfgs, results=None) -> list[ComparisonRow]:
    """Per-seed paired comparison; the first config is the baseline."""
    cfgs = list(cfgs)
    if not cfgs:
        raise ConfigError("nothing to compare")
    check_pairing(cfgs)
    if results is None:
        results = [run_experiment(c, write=False) for c in cfgs]
    base = results[0].per_seed("final_accuracy")
    rows = []
    for cfg, res in zip(cfgs, results):
        acc = res.per_seed("final_accuracy")
        rows.append(ComparisonRow(cfg.name, cfg.method, acc, res.per_seed("fe"), res.per_seed("rfe"), acc - base))
    return rows


def format_comparison(rows: list[ComparisonRow]) -> str:
    lines = [f"{'name':<24}{'method':<8}{'acc':>16}{'delta':>16}{'FE':>8}{'RFE':>8}  per-seed"]
    for r in rows:
        d = r.as_dict()
        lines.append(
            f"{d['name']:<24}{d['method']:<8}"
            f"{100 * d['acc_mean']:>9.2f}±{100 * d['acc_std']:<6.2f}"
            f"{100 * d['delta_mean']:>+9.2f}±{100 * d['delta_std']:<6.2f}"
            f"{d['fe_mean']:>8.4f}{d['rfe_mean']:>8.4f}  {d['per_seed']}"
        )
    return "\n".join(lines)

"""Full-graph training, metrics and the multi-seed experiment drivers."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .datagen import Dataset
from .models import Ablation, GraphContext, ModelParams, ModelSpec, init_params, record_forward

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DROPOUT_SEED_OFFSET = 1_000_003


class TrainingDiverged(ArithmeticError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    model: str = "msgs"
    lr: float = 0.01
    weight_decay: float = 5e-4
    dropout: float = 0.5
    hidden: int = 32
    layers: int = 10
    epochs: int = 500
    seed: int = 0
    eps: float = 0.3
    ablation: str | None = None
    positive_class: int = 1

    def validate(self) -> None:
        if not self.lr >= 0:
            raise ValueError(f"learning rate must be non-negative, got {self.lr}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    def model_spec(self, in_dim: int, classes: int) -> ModelSpec:
        return ModelSpec(self.model, in_dim, self.hidden, classes, self.layers, self.eps)


class Adam:
    """Adam with bias correction and decoupled weight decay.

    Decay shrinks only the tensors named in ``decay``:
    ``theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)``.
    """

    def __init__(self, params: dict[str, np.ndarray], lr=0.01, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0, decay=frozenset()):
        self.params = params
        self.lr, self.eps, self.weight_decay = lr, eps, weight_decay
        self.beta1, self.beta2 = betas
        self.decay = decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            update = (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + self.eps)
            if name in self.decay:
                update = update + self.weight_decay * p
            p -= self.lr * update


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    tn: int
    fp: int
    fn: int


def evaluate(logits, labels, mask=None, positive_class: int = 1) -> Metrics:
    """Accuracy plus one-vs-rest precision/recall/F1 for ``positive_class``.

    When a ratio's denominator is zero it is reported as 0.
    """
    pred = np.argmax(np.asarray(logits), axis=1)
    labels = np.asarray(labels)
    idx = np.arange(len(labels)) if mask is None else np.flatnonzero(mask)
    if len(idx) == 0:
        raise ValueError("evaluate: empty mask")
    p, y = pred[idx] == positive_class, labels[idx] == positive_class
    tp = int(np.sum(p & y))
    fp = int(np.sum(p & ~y))
    fn = int(np.sum(~p & y))
    tn = len(idx) - tp - fp - fn
    accuracy = float(np.mean(pred[idx] == labels[idx]))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(accuracy, precision, recall, f1, tp, tn, fp, fn)


@dataclass
class TrainResult:
    params: ModelParams
    log: list = field(default_factory=list)  # (epoch, train_loss, val_accuracy)
    best_epoch: int = 0
    val: Metrics | None = None
    test: Metrics | None = None
    config: TrainConfig | None = None
    last_params: ModelParams | None = None


def _forward(params, ctx, ds, cfg, training, epoch):
    tape = ad.Tape(seed=cfg.seed + DROPOUT_SEED_OFFSET, epoch=epoch, training=training)
    logits, art = record_forward(
        tape, params, ctx, ds.features, cfg.dropout if training else 0.0, cfg.ablation
    )
    return tape, logits, art


def predict(params: ModelParams, ds: Dataset, ablation=None, ctx: GraphContext | None = None):
    """Eval-mode logits and artifacts."""
    ctx = ctx or GraphContext.from_graph(ds.graph)
    _, logits, art = _forward(params, ctx, ds, TrainConfig(ablation=ablation), False, 0)
    return logits.value.copy(), art


def train(ds: Dataset, config: TrainConfig, ctx: GraphContext | None = None) -> TrainResult:
    """Train on ``ds.train_mask``; keep the parameters with the best validation
    accuracy (earliest epoch wins ties) and report test metrics for them."""
    config.validate()
    if not ds.train_mask.any() or not ds.val_mask.any():
        raise ValueError("dataset needs non-empty train and validation masks")
    ctx = ctx or GraphContext.from_graph(ds.graph)
    classes = int(ds.labels.max()) + 1
    params = init_params(config.model_spec(ds.features.shape[1], classes), config.seed)
    opt = Adam(params.tensors, lr=config.lr, weight_decay=config.weight_decay, decay=params.decay)

    result = TrainResult(params.copy(), config=config)
    best_acc = -1.0
    for epoch in range(1, config.epochs + 1):
        tape, logits, _ = _forward(params, ctx, ds, config, True, epoch)
        loss = ad.cross_entropy_with_softmax(logits, ds.labels, ds.train_mask)
        loss_value = float(loss.value[0, 0])
        if not np.isfinite(loss_value):
            raise TrainingDiverged(epoch)
        opt.step(ad.param_grads(loss))

        _, eval_logits, _ = _forward(params, ctx, ds, config, False, epoch)
        val_acc = evaluate(eval_logits.value, ds.labels, ds.val_mask).accuracy
        result.log.append((epoch, loss_value, val_acc))
        if val_acc > best_acc:
            best_acc = val_acc
            result.params = params.copy()
            result.best_epoch = epoch

    result.last_params = params
    final_logits, _ = predict(result.params, ds, config.ablation, ctx)
    if not np.all(np.isfinite(final_logits)):
        raise TrainingDiverged(result.best_epoch)
    result.val = evaluate(final_logits, ds.labels, ds.val_mask, config.positive_class)
    if ds.test_mask.any():
        result.test = evaluate(final_logits, ds.labels, ds.test_mask, config.positive_class)
    return result


# -- experiment drivers -----------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    model: str
    layers: int
    seed: int
    split: str
    metrics: Metrics


METRIC_HEADER = ["model", "layers", "seed", "split", "accuracy", "precision", "recall", "f1"]


def write_metrics_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        for r in records:
            m = r.metrics
            w.writerow([r.model, r.layers, r.seed, r.split,
                        f"{m.accuracy:.12g}", f"{m.precision:.12g}", f"{m.recall:.12g}", f"{m.f1:.12g}"])


def write_log_csv(log_rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_accuracy"])
        for epoch, loss, acc in log_rows:
            w.writerow([epoch, f"{loss:.12g}", f"{acc:.12g}"])


def model_label(config: TrainConfig) -> str:
    return config.model if config.ablation is None else f"{config.model}:{config.ablation}"


def _job(args):
    ds, config = args
    res = train(ds, config)
    return RunRecord(model_label(config), config.layers, config.seed, "test", res.test)


def run_jobs(ds: Dataset, configs, workers: int = 1) -> list[RunRecord]:
    """Train every config; results come back ordered by (model, layers, seed)."""
    jobs = [(ds, c) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_job, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_job(job))
            r = records[-1]
            log.info("%s K=%d seed=%d acc=%.4f", r.model, r.layers, r.seed, r.metrics.accuracy)
    return sorted(records, key=lambda r: (r.model, r.layers, r.seed))


def depth_sweep(ds: Dataset, kinds, layer_list, config: TrainConfig, seeds=DEFAULT_SEEDS, workers=1):
    configs = [
        replace(config, model=kind, layers=k, seed=s)
        for kind in kinds for k in layer_list for s in seeds
    ]
    return run_jobs(ds, configs, workers)


ABLATION_VARIANTS = (None, Ablation.NO_MS.value, Ablation.NO_SAM_NODE.value, Ablation.NO_SAM_SCALE.value)


def ablation_suite(ds: Dataset, config: TrainConfig, seeds=DEFAULT_SEEDS, workers=1):
    configs = [
        replace(config, model="msgs", ablation=variant, seed=s)
        for variant in ABLATION_VARIANTS for s in seeds
    ]
    return run_jobs(ds, configs, workers)


def summarize(records) -> dict[tuple[str, int], tuple[float, float]]:
    """Mean and (population) std of test accuracy per (model, layers)."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in records:
        groups.setdefault((r.model, r.layers), []).append(r.metrics.accuracy)
    return {k: (float(np.mean(v)), float(np.std(v))) for k, v in sorted(groups.items())}

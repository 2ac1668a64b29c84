"""Training: game-id splits, minibatch SGD, best-checkpoint selection, manifest.

A run writes into its run directory:
    checkpoint.parquet   weights of the best validation epoch
    manifest.json        config snapshot, seed, dataset checksum, split games,
                         per-epoch history, timing and peak RSS

In single-threaded mode, identical config + seed + dataset give bit-identical
checkpoints.
"""

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from trajnet_utils import debug, io

from . import metrics
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import NonFiniteLossError, SplitError, TaskMismatchError
from .losses import LossWeights
from .models import Model, build_model, encode_batch, model_from_state, predict_batch
from .optim import sgd_step
from .records import Dataset, DatasetHeader
from .report import EvalReport, build_event_report, build_team_report
from .settings import TASK_OF, TrainConfig

OVERFIT_TARGET = 0.01
CHECKPOINT_NAME = "checkpoint.parquet"
MANIFEST_NAME = "manifest.json"


# =============================================================================
# Splits
# =============================================================================

@dataclass
class DatasetSplit:
    train: Dataset
    val: Dataset
    test: Dataset
    games: dict[str, list[str]]


def split_by_game(dataset: Dataset, fractions: tuple[float, float, float], seed: int) -> DatasetSplit:
    """Assign whole games to train/val/test; game order is shuffled under `seed`."""
    games = sorted(set(dataset.game_ids()))
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
    games = [games[i] for i in rng.permutation(len(games))]

    n = len(games)
    n_val = int(round(fractions[1] * n))
    n_test = int(round(fractions[2] * n))
    n_train = n - n_val - n_test
    if n_train < 1 or (fractions[1] > 0 and n_val < 1):
        raise SplitError(f"{n} game(s) cannot be split {fractions}: need at least one train and one val game")

    assigned = {
        "train": sorted(games[:n_train]),
        "val": sorted(games[n_train:n_train + n_val]),
        "test": sorted(games[n_train + n_val:]),
    }
    part_of = {g: part for part, gs in assigned.items() for g in gs}
    indices = {part: [] for part in assigned}
    for i, g in enumerate(dataset.game_ids()):
        indices[part_of[g]].append(i)
    return DatasetSplit(*(dataset.subset(indices[p]) for p in ("train", "val", "test")), games=assigned)


def drop_keyless(dataset: Dataset, part: str) -> Dataset:
    """Event samples without a key person cannot be trained or scored key-known."""
    if dataset.header.task != "event":
        return dataset
    keep = [i for i, s in enumerate(dataset.samples) if s.key is not None]
    dropped = len(dataset) - len(keep)
    if not dropped:
        return dataset
    print(f"  {part}: dropped {dropped} sample(s) without a key person")
    return dataset.subset(keep)


# =============================================================================
# Validation metric
# =============================================================================

def validation_metric(model: Model, dataset: Dataset) -> float:
    """mAP (event, key known) or accuracy (team); NaN on an empty set."""
    if not len(dataset):
        return float("nan")
    probs = predict_batch(model, dataset.samples, dataset.header.bounds)
    labels = dataset.labels
    if dataset.header.task == "team":
        return metrics.accuracy(probs, labels)
    aps = [metrics.average_precision_arrays(probs[:, c], labels == c) for c in range(probs.shape[1])]
    aps = [a for a in aps if not np.isnan(a)]
    return float(np.mean(aps)) if aps else float("nan")


def evaluate_split(model: Model, dataset: Dataset, classes: tuple[str, ...]) -> EvalReport:
    probs = predict_batch(model, dataset.samples, dataset.header.bounds)
    if dataset.header.task == "event":
        return build_event_report(probs, dataset.labels, classes, regime="key_known", samples=dataset.samples)
    return build_team_report(probs, dataset.labels, dataset.game_ids(), classes)


def _better(value: float, best: float) -> bool:
    if np.isnan(value):
        return False
    return np.isnan(best) or value > best


# =============================================================================
# Manifest
# =============================================================================

@dataclass
class RunManifest:
    mode: str
    config: dict
    model: dict
    seed: int
    dataset: str
    dataset_sha256: str
    checkpoint: str | None = None
    classes: list[str] = field(default_factory=list)
    loss_weights: list[float] = field(default_factory=list)
    params: int = 0
    games: dict[str, list[str]] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    best_epoch: int | None = None
    best_val_metric: float | None = None
    test: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""
    wall_seconds: float = 0.0
    peak_rss_mb: float = 0.0

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and np.isnan(v):
                return None
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, list):
                return [clean(x) for x in v]
            return v
        return {name: clean(getattr(self, name)) for name in self.__dataclass_fields__}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _start_manifest(mode: str, cfg: TrainConfig, model: Model, classes, w: LossWeights,
                    dataset_path: str | None) -> RunManifest:
    return RunManifest(
        mode=mode,
        config=cfg.to_dict(),
        model=model.cfg.to_dict(),
        seed=cfg.seed,
        dataset=str(dataset_path or ""),
        dataset_sha256=io.file_checksum(dataset_path) if dataset_path else "",
        classes=list(classes),
        loss_weights=list(w.values),
        params=model.params.count(),
        started_at=_now(),
    )


# =============================================================================
# Training
# =============================================================================

def _prepare(cfg: TrainConfig, dataset: Dataset):
    header = dataset.header
    classes = cfg.resolve_classes(header)
    model_cfg = cfg.model_config(classes)
    if (model_cfg.np, model_cfg.t) != (header.np, header.t):
        raise TaskMismatchError(f"model expects np={model_cfg.np} t={model_cfg.t}, "
                                f"dataset has np={header.np} t={header.t}")
    return classes, build_model(model_cfg, seed=cfg.seed)


def _step(model: Model, x: np.ndarray, y: np.ndarray, w: LossWeights, lr: float, momentum: float,
          where: str) -> float:
    model.params.zero_grad()
    loss, _ = model.loss_and_backward(x, y, w)
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"loss became {loss} at {where}; try a lower learning rate")
    sgd_step(model.params, lr, momentum)
    return loss


def train(cfg: TrainConfig, dataset: Dataset, out_dir: str | Path, dataset_path: str | None = None,
          checkpoint_path: str | Path | None = None) -> RunManifest:
    """Train with early stopping on the validation metric; keeps the best epoch's weights."""
    out_dir = Path(out_dir)
    checkpoint_path = Path(checkpoint_path) if checkpoint_path else out_dir / CHECKPOINT_NAME
    classes, model = _prepare(cfg, dataset)
    split = split_by_game(dataset, cfg.split_fractions, cfg.seed)
    split.train, split.val, split.test = (drop_keyless(split.train, "train"), drop_keyless(split.val, "val"),
                                          drop_keyless(split.test, "test"))
    if not len(split.train):
        raise SplitError("no training sample carries a key person")
    w = cfg.weights(classes, split.train.labels)

    manifest = _start_manifest("train", cfg, model, classes, w, dataset_path)
    manifest.games = split.games
    metric_name = "val_mAP" if dataset.header.task == "event" else "val_acc"

    print(f"[train] {model.cfg.architecture} ({model.cfg.variant}), {model.params.count():,} weights")
    print(f"  train {len(split.train)} / val {len(split.val)} / test {len(split.test)} samples "
          f"({len(split.games['train'])}/{len(split.games['val'])}/{len(split.games['test'])} games)")

    x_train = encode_batch(model, split.train.samples, dataset.header.bounds)
    y_train = split.train.labels
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    opt = cfg.optimizer
    best_state, best, stale = None, float("nan"), 0
    t_start = time.monotonic()

    with debug.MemoryProfiler() as profiler:
        for epoch in range(1, cfg.epochs + 1):
            t0 = time.monotonic()
            order = shuffle_rng.permutation(len(y_train))
            total = 0.0
            for step, i in enumerate(range(0, len(order), opt.batch_size)):
                idx = order[i:i + opt.batch_size]
                loss = _step(model, x_train[idx], y_train[idx], w, opt.lr_at(epoch), opt.momentum,
                             f"epoch {epoch} step {step}")
                total += loss * len(idx)
            train_loss = total / max(len(y_train), 1)
            val = validation_metric(model, split.val)
            seconds = time.monotonic() - t0

            improved = _better(val, best)
            manifest.history.append({"epoch": epoch, "train_loss": train_loss, metric_name: val,
                                     "seconds": round(seconds, 3)})
            debug.log_epoch(epoch, train_loss, val, seconds)
            print(f"[train] epoch {epoch}/{cfg.epochs} loss {train_loss:.4f} {metric_name} {val:.4f} "
                  f"({seconds:.1f}s){' *' if improved else ''}")

            if improved or best_state is None:
                best_state = model.params.state()
                manifest.best_epoch = epoch
                if improved:
                    best, stale = val, 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    print(f"  Early stop: no {metric_name} gain for {cfg.patience} epochs")
                    break

    model.params.load_state(best_state)
    manifest.best_val_metric = best
    manifest.checkpoint = save_checkpoint(checkpoint_path, model.params, model.cfg.to_dict(), cfg.seed, classes)

    if len(split.test):
        report = evaluate_split(model, split.test, classes)
        manifest.test = report.summary()
        print(f"[train] test {', '.join(f'{k} {v:.4f}' for k, v in manifest.test.items() if isinstance(v, float))}")

    manifest.finished_at = _now()
    manifest.wall_seconds = round(time.monotonic() - t_start, 3)
    manifest.peak_rss_mb = profiler.peak_rss_mb
    io.write_json(out_dir / MANIFEST_NAME, manifest.to_dict())
    return manifest


def overfit(cfg: TrainConfig, dataset: Dataset, n_samples: int, out_dir: str | Path,
            dataset_path: str | None = None) -> RunManifest:
    """Full-batch steps on the first `n_samples` samples until the loss drops below 0.01.

    A sanity check of the gradient path: no split, no validation, no checkpoint.
    """
    classes, model = _prepare(cfg, dataset)
    keyed = drop_keyless(dataset, "overfit")
    batch = keyed.subset(range(min(n_samples, len(keyed))))
    if not len(batch):
        raise SplitError("overfit needs at least one sample with a key person" if len(dataset)
                         else "overfit needs at least one sample")
    w = cfg.weights(classes, batch.labels)
    manifest = _start_manifest("overfit", cfg, model, classes, w, dataset_path)

    x, y = encode_batch(model, batch.samples, dataset.header.bounds), batch.labels
    opt = cfg.optimizer
    print(f"[train] overfit {len(batch)} samples, up to {cfg.overfit_steps} steps")
    t_start = time.monotonic()
    with debug.MemoryProfiler() as profiler:
        for step in range(1, cfg.overfit_steps + 1):
            loss = _step(model, x, y, w, opt.lr, opt.momentum, f"overfit step {step}")
            manifest.history.append({"step": step, "train_loss": loss})
            if step == 1 or step % 50 == 0:
                print(f"  step {step} loss {loss:.6f}")
            if loss < OVERFIT_TARGET:
                print(f"  loss {loss:.6f} < {OVERFIT_TARGET} after {step} steps")
                break

    manifest.finished_at = _now()
    manifest.wall_seconds = round(time.monotonic() - t_start, 3)
    manifest.peak_rss_mb = profiler.peak_rss_mb
    io.write_json(Path(out_dir) / MANIFEST_NAME, manifest.to_dict())
    return manifest


# =============================================================================
# Loading trained models
# =============================================================================

def load_trained(path: str | Path, header: DatasetHeader) -> tuple[Model, tuple[str, ...]]:
    """Model from a checkpoint, checked against the dataset it will score."""
    ckpt = load_checkpoint(path)
    model = model_from_state(ckpt.config, ckpt.state)
    task = TASK_OF[model.cfg.architecture]
    if task != header.task:
        raise TaskMismatchError(f"checkpoint holds a {model.cfg.architecture} model ({task} task), "
                                f"dataset holds {header.task} samples")
    classes = ckpt.classes or header.classes
    if tuple(classes) != header.classes:
        raise TaskMismatchError(f"checkpoint classes {list(classes)} differ from dataset classes "
                                f"{list(header.classes)}")
    if (model.cfg.np, model.cfg.t) != (header.np, header.t):
        raise TaskMismatchError(f"checkpoint expects np={model.cfg.np} t={model.cfg.t}, "
                                f"dataset has np={header.np} t={header.t}")
    return model, tuple(classes)

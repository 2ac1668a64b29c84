"""Softmax head and weighted cross-entropy.

Batch loss is the mean over samples of w[label] * -ln p[label]. The class
weights of the event task default to 0.07, 0.6, 1, 0.4, 0.2, 0.7 for pass,
dump out, dump in, shot, carry and puck protection.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

EVENT_CLASSES = ("pass", "dump_out", "dump_in", "shot", "carry", "puck_protection")
EVENT_LOSS_WEIGHTS = (0.07, 0.6, 1.0, 0.4, 0.2, 0.7)


@dataclass(frozen=True)
class LossWeights:
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("loss weights must cover at least one class")
        if any(not np.isfinite(v) or v <= 0.0 for v in values):
            raise ConfigError(f"loss weights must be finite and > 0, got {values}")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, num_classes: int) -> "LossWeights":
        return cls((1.0,) * num_classes)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, label: int) -> float:
        return self.values[label]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def scaled(self, c: float) -> "LossWeights":
        return LossWeights(tuple(v * c for v in self.values))


def inverse_frequency_weights(labels, num_classes: int) -> LossWeights:
    """Weights proportional to 1 / class frequency, rarest class at 1.0.

    Classes absent from `labels` get the largest weight seen.
    """
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=num_classes).astype(np.float64)
    if counts.sum() == 0:
        return LossWeights.uniform(num_classes)
    present = counts > 0
    raw = np.zeros(num_classes)
    raw[present] = 1.0 / counts[present]
    raw[~present] = raw[present].max()
    return LossWeights(tuple(raw / raw.max()))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def fc_softmax_forward(z: np.ndarray, w_e: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Probability vector softmax(z W_e [+ b]) for a flat feature vector z."""
    z = np.asarray(z, dtype=np.float64)
    w_e = np.asarray(w_e, dtype=np.float64)
    if z.ndim != 1 or w_e.ndim != 2 or z.shape[0] != w_e.shape[0]:
        raise ShapeError(f"fc_softmax_forward: features {z.shape} do not match weights {w_e.shape}")
    logits = z @ w_e
    if bias is not None:
        logits = logits + bias
    return softmax(logits)


def _check_labels(labels: np.ndarray, num_classes: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ShapeError(f"label out of range 0..{num_classes - 1}")


def weighted_cross_entropy(probs: np.ndarray, label: int, w: LossWeights) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (len(w),):
        raise ShapeError(f"probability vector has {probs.shape[0]} entries, weights cover {len(w)} classes")
    _check_labels(np.asarray([label]), len(w))
    return w[label] * -np.log(probs[label])


def batch_loss_and_grad(logits: np.ndarray, labels: np.ndarray, w: LossWeights) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean weighted cross-entropy over a batch.

    Returns (loss, dloss/dlogits, probs). The log-probabilities are taken from
    the shifted logits so a saturated softmax never yields -inf.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    batch, num_classes = logits.shape
    if num_classes != len(w):
        raise ShapeError(f"network emits {num_classes} classes, weights cover {len(w)}")
    _check_labels(labels, num_classes)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    probs = np.exp(log_probs)
    rows = np.arange(batch)
    sample_w = w.as_array()[labels]
    loss = float(np.sum(sample_w * -log_probs[rows, labels]) / batch)
    dlogits = probs.copy()
    dlogits[rows, labels] -= 1.0
    dlogits *= (sample_w / batch)[:, None]
    return loss, dlogits, probs

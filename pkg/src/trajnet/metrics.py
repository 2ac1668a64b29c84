"""Ranking and classification metrics.

AP is un-interpolated: the mean, over positives, of precision at the rank
where each positive appears. Equal scores keep their input order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


def _split_pairs(scores) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(scores)
    s = np.array([float(p[0]) for p in pairs], dtype=np.float64)
    y = np.array([bool(p[1]) for p in pairs], dtype=bool)
    return s, y


def _ranked_hits(scores: np.ndarray, positive: np.ndarray) -> np.ndarray:
    order = np.argsort(-scores, kind="stable")
    return positive[order]


def average_precision(scores) -> float:
    """AP of (score, is_positive) pairs; NaN when there is no positive."""
    s, y = _split_pairs(scores)
    return average_precision_arrays(s, y)


def average_precision_arrays(scores: np.ndarray, positive: np.ndarray) -> float:
    hits = _ranked_hits(np.asarray(scores, dtype=np.float64), np.asarray(positive, dtype=bool))
    n_pos = int(hits.sum())
    if n_pos == 0:
        return float("nan")
    ranks = np.arange(1, hits.size + 1)
    precision = np.cumsum(hits) / ranks
    return float(precision[hits].sum() / n_pos)


def pr_curve(scores) -> list[tuple[float, float]]:
    """(recall, precision) after each distinct score threshold, highest first.

    A run of tied scores collapses to one point, so the step area equals AP
    only when no two scores tie.
    """
    s, y = _split_pairs(scores)
    return pr_curve_arrays(s, y)


def pr_curve_arrays(scores: np.ndarray, positive: np.ndarray) -> list[tuple[float, float]]:
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise ShapeError("pr_curve needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tp = np.cumsum(positive[order])
    # last index of every run of equal scores
    ends = np.flatnonzero(np.append(sorted_scores[1:] != sorted_scores[:-1], True))
    return [(float(tp[i] / n_pos), float(tp[i] / (i + 1))) for i in ends]


def curve_area(points: list[tuple[float, float]]) -> float:
    """Step integration: sum of (recall gain) x (precision at that point)."""
    area = 0.0
    prev = 0.0
    for recall, precision in points:
        area += (recall - prev) * precision
        prev = recall
    return area


def mean_average_precision(aps: list[float]) -> float:
    """Mean over classes with a defined AP; NaN entries are skipped with a warning."""
    defined = [a for a in aps if not np.isnan(a)]
    skipped = len(aps) - len(defined)
    if skipped:
        print(f"  Warning: {skipped} class(es) without positives excluded from mAP")
    return float(np.mean(defined)) if defined else float("nan")


def top_k(probs: np.ndarray, k: int) -> np.ndarray:
    """Class ids of the k highest probabilities; ties go to the smaller id."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 1 <= k <= probs.shape[-1]:
        raise ShapeError(f"k must lie in 1..{probs.shape[-1]}, got {k}")
    return np.argsort(-probs, axis=-1, kind="stable")[..., :k]


def ranked_candidates(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k highest scores, best first; equal scores keep input order."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.argsort(-scores, kind="stable")[:max(k, 0)]


def hit_at_k(probs, label: int, k: int) -> bool:
    return bool(label in top_k(probs, k))


def hit_rate(probs: np.ndarray, labels: np.ndarray, k: int) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return float("nan")
    hits = (top_k(probs, k) == labels[:, None]).any(axis=1)
    return float(hits.mean())


def predictions(probs: np.ndarray) -> np.ndarray:
    return top_k(probs, 1)[:, 0] if len(probs) else np.zeros(0, dtype=np.int64)


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return float("nan")
    return float((predictions(probs) == labels).mean())


def confusion_matrix(true: np.ndarray, pred: np.ndarray, num_classes: int) -> np.ndarray:
    """Counts with true classes on rows, predicted classes on columns."""
    out = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(out, (np.asarray(true, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return out


# =============================================================================
# Game-level voting
# =============================================================================

def majority_vote(votes) -> tuple[int, bool]:
    """Modal class id and whether the top count was shared (smaller id wins)."""
    votes = np.asarray(list(votes), dtype=np.int64)
    if votes.size == 0:
        raise ShapeError("majority_vote needs at least one vote")
    counts = np.bincount(votes)
    winners = np.flatnonzero(counts == counts.max())
    return int(winners[0]), bool(winners.size > 1)


@dataclass(frozen=True)
class GameVote:
    game_id: str
    true: int
    predicted: int
    n_possessions: int
    tied: bool

    @property
    def correct(self) -> bool:
        return self.true == self.predicted


def game_votes(game_ids: list[str], labels: np.ndarray, preds: np.ndarray) -> list[GameVote]:
    """One vote per (game, true team), in sorted key order."""
    groups: dict[tuple[str, int], list[int]] = {}
    for gid, label, pred in zip(game_ids, np.asarray(labels).tolist(), np.asarray(preds).tolist()):
        groups.setdefault((gid, int(label)), []).append(int(pred))
    out = []
    for (gid, label), votes in sorted(groups.items()):
        winner, tied = majority_vote(votes)
        out.append(GameVote(gid, label, winner, len(votes), tied))
    return out

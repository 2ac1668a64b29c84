"""EvalReport assembly and its files.

Each report is written as a text table (<stem>.txt), line-delimited JSON
records (<stem>.jsonl), CSV tables through pyarrow, and one two-column
recall/precision CSV per class under pr/.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pyarrow as pa

from trajnet_utils import io

from . import metrics

AP_VARIANT = "uninterpolated"
HIT_KS = (2, 3)
RETRIEVAL_K = 5


@dataclass
class EvalReport:
    task: str
    classes: tuple[str, ...]
    n_samples: int
    regime: str | None = None
    per_class_ap: list[float] = field(default_factory=list)
    mean_ap: float = float("nan")
    pr_curves: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    accuracy: float = float("nan")
    hits: dict[int, float] = field(default_factory=dict)
    confusion: np.ndarray | None = None
    votes: list[metrics.GameVote] = field(default_factory=list)
    game_accuracy: float = float("nan")
    game_confusion: np.ndarray | None = None
    retrieval: dict[str, list[dict]] = field(default_factory=dict)

    @property
    def vote_ties(self) -> int:
        return sum(v.tied for v in self.votes)

    @property
    def name(self) -> str:
        return self.task if self.regime is None else f"{self.task}_{self.regime}"

    def summary(self) -> dict:
        out = {
            "task": self.task,
            "regime": self.regime,
            "n_samples": self.n_samples,
            "accuracy": self.accuracy,
            **{f"hit@{k}": v for k, v in sorted(self.hits.items())},
            "ap_variant": AP_VARIANT,
        }
        if self.task == "event":
            out["mAP"] = self.mean_ap
        else:
            out.update(game_accuracy=self.game_accuracy, n_games=len(self.votes), vote_ties=self.vote_ties)
        return out


def build_event_report(probs: np.ndarray, labels: np.ndarray, classes: tuple[str, ...],
                       regime: str | None = None, samples: list | None = None,
                       retrieval_k: int = RETRIEVAL_K) -> EvalReport:
    """One-vs-rest AP per class (positive score = softmax probability of that class).

    With `samples`, each class also lists the `retrieval_k` samples scored
    highest for it, located by game id and center frame.
    """
    labels = np.asarray(labels, dtype=np.int64)
    report = EvalReport("event", tuple(classes), len(labels), regime)
    for c, name in enumerate(classes):
        positive = labels == c
        report.per_class_ap.append(metrics.average_precision_arrays(probs[:, c], positive))
        if positive.any():
            report.pr_curves[name] = metrics.pr_curve_arrays(probs[:, c], positive)
    report.mean_ap = metrics.mean_average_precision(report.per_class_ap)
    report.accuracy = metrics.accuracy(probs, labels)
    report.hits = {k: metrics.hit_rate(probs, labels, k) for k in HIT_KS if k <= len(classes)}
    report.confusion = metrics.confusion_matrix(labels, metrics.predictions(probs), len(classes))
    if samples is not None:
        report.retrieval = retrieve_top(probs, labels, classes, samples, retrieval_k)
    return report


def retrieve_top(probs: np.ndarray, labels: np.ndarray, classes: tuple[str, ...], samples: list,
                 k: int = RETRIEVAL_K) -> dict[str, list[dict]]:
    out = {}
    for c, name in enumerate(classes):
        out[name] = [{
            "rank": rank,
            "game_id": samples[i].game_id,
            "center_frame": int(samples[i].center_frame),
            "score": float(probs[i, c]),
            "true": classes[labels[i]],
        } for rank, i in enumerate(metrics.ranked_candidates(probs[:, c], k), start=1)]
    return out


def build_team_report(probs: np.ndarray, labels: np.ndarray, game_ids: list[str], classes: tuple[str, ...],
                      ks: tuple[int, ...] = HIT_KS) -> EvalReport:
    """Possession accuracy, hit@k and per-(game, team) majority votes."""
    labels = np.asarray(labels, dtype=np.int64)
    report = EvalReport("team", tuple(classes), len(labels))
    preds = metrics.predictions(probs)
    report.accuracy = metrics.accuracy(probs, labels)
    report.hits = {k: metrics.hit_rate(probs, labels, k) for k in ks if k <= len(classes)}
    report.confusion = metrics.confusion_matrix(labels, preds, len(classes))
    report.votes = metrics.game_votes(game_ids, labels, preds)
    if report.votes:
        report.game_accuracy = float(np.mean([v.correct for v in report.votes]))
    report.game_confusion = metrics.confusion_matrix(
        [v.true for v in report.votes], [v.predicted for v in report.votes], len(classes))
    return report


# =============================================================================
# Rendering
# =============================================================================

def _fmt(value: float, pct: bool = False) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    return f"{100 * value:.2f}%" if pct else f"{value:.4f}"


def _json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return _json_safe(value.item())
    return value


def report_lines(report: EvalReport) -> list[str]:
    lines = [f"{report.name}: {report.n_samples} samples"]
    if report.task == "event":
        counts = np.asarray(report.confusion).sum(axis=1)
        lines.append(f"  {'class':<18} {'n':>6} {'AP':>8}")
        for name, n, ap in zip(report.classes, counts, report.per_class_ap):
            lines.append(f"  {name:<18} {n:>6} {_fmt(ap):>8}")
        lines.append(f"  {'mAP':<18} {'':>6} {_fmt(report.mean_ap):>8}")
        lines.append(f"  accuracy {_fmt(report.accuracy, pct=True)}")
    else:
        header = ["acc"] + [f"hit@{k}" for k in sorted(report.hits)] + ["game acc"]
        values = [report.accuracy] + [report.hits[k] for k in sorted(report.hits)] + [report.game_accuracy]
        lines.append("  " + " ".join(f"{h:>9}" for h in header))
        lines.append("  " + " ".join(f"{_fmt(v, pct=True):>9}" for v in values))
        lines.append(f"  games {len(report.votes)}, vote ties {report.vote_ties}")
    lines.append(f"  (AP variant: {AP_VARIANT})")
    return lines


def report_records(report: EvalReport) -> list[dict]:
    records = [{"kind": "summary", **{k: _json_safe(v) for k, v in report.summary().items()}}]
    if report.task == "event":
        counts = np.asarray(report.confusion).sum(axis=1)
        for name, n, ap in zip(report.classes, counts, report.per_class_ap):
            records.append({"kind": "class", "class": name, "n_positive": int(n), "ap": _json_safe(ap)})
        for name, hits in report.retrieval.items():
            records.extend({"kind": "retrieval", "class": name, **hit} for hit in hits)
    for v in report.votes:
        records.append({"kind": "game", "game_id": v.game_id, "true": report.classes[v.true],
                        "predicted": report.classes[v.predicted], "n_possessions": v.n_possessions,
                        "tied": v.tied})
    if report.confusion is not None:
        for name, row in zip(report.classes, np.asarray(report.confusion)):
            records.append({"kind": "confusion", "true": name, "counts": row.tolist()})
    return records


def per_class_table(report: EvalReport) -> pa.Table:
    counts = np.asarray(report.confusion).sum(axis=1)
    return pa.table({
        "class": pa.array(list(report.classes), pa.string()),
        "n_positive": pa.array(counts.tolist(), pa.int64()),
        "ap": pa.array([_json_safe(a) for a in report.per_class_ap], pa.float64()),
    })


def confusion_table(matrix: np.ndarray, classes: tuple[str, ...]) -> pa.Table:
    columns = {"true": pa.array(list(classes), pa.string())}
    for j, name in enumerate(classes):
        columns[name] = pa.array(np.asarray(matrix)[:, j].tolist(), pa.int64())
    return pa.table(columns)


def pr_table(points: list[tuple[float, float]]) -> pa.Table:
    return pa.table({
        "recall": pa.array([p[0] for p in points], pa.float64()),
        "precision": pa.array([p[1] for p in points], pa.float64()),
    })


def write_report(report: EvalReport, out_dir: str | Path) -> list[str]:
    """Write every file for one report; returns the written paths."""
    out_dir = Path(out_dir)
    stem = report.name
    written = [
        io.write_text(out_dir / f"{stem}.txt", "\n".join(report_lines(report)) + "\n"),
        io.write_jsonl(out_dir / f"{stem}.jsonl", report_records(report)),
        io.write_csv(confusion_table(report.confusion, report.classes), out_dir / f"{stem}_confusion.csv"),
    ]
    if report.task == "event":
        written.append(io.write_csv(per_class_table(report), out_dir / f"{stem}_classes.csv"))
        for name, points in report.pr_curves.items():
            written.append(io.write_csv(pr_table(points), out_dir / "pr" / f"{stem}_{name}.csv"))
    elif report.game_confusion is not None:
        written.append(io.write_csv(confusion_table(report.game_confusion, report.classes),
                                    out_dir / f"{stem}_game_confusion.csv"))
    return written


# =============================================================================
# Sweep table
# =============================================================================

SWEEP_COLUMNS = ("variant", "acc", "hit@2", "hit@3", "game_acc", "params")


def sweep_table(rows: list[dict]) -> pa.Table:
    return pa.table({
        "variant": pa.array([r["variant"] for r in rows], pa.string()),
        "acc": pa.array([_json_safe(r.get("acc")) for r in rows], pa.float64()),
        "hit@2": pa.array([_json_safe(r.get("hit@2")) for r in rows], pa.float64()),
        "hit@3": pa.array([_json_safe(r.get("hit@3")) for r in rows], pa.float64()),
        "game_acc": pa.array([_json_safe(r.get("game_acc")) for r in rows], pa.float64()),
        "params": pa.array([r.get("params") for r in rows], pa.int64()),
    })


def sweep_lines(rows: list[dict]) -> list[str]:
    lines = [f"{'model':<14} {'acc':>9} {'hit@2':>9} {'hit@3':>9} {'game acc':>9} {'params':>12}"]
    for r in rows:
        if r.get("error"):
            lines.append(f"{r['variant']:<14} skipped: {r['error']}")
            continue
        lines.append(f"{r['variant']:<14} {_fmt(r['acc'], True):>9} {_fmt(r['hit@2'], True):>9} "
                     f"{_fmt(r['hit@3'], True):>9} {_fmt(r['game_acc'], True):>9} {r['params']:>12,}")
    return lines

"""Sample types and the line-delimited dataset file.

A dataset file is one JSON object per line. Line 1 is the header:

    {"format_version": 1, "task": "event"|"team", "np": 5, "t": 16,
     "bounds": [xmin, xmax, ymin, ymax], "classes": ["pass", ...]}

Every following line is one sample. Event records:

    {"persons": [{"x": [...], "y": [...], "mask": [0|1, ...]}, ...],
     "label": "pass", "key": 0|null, "game_id": "g00", "center_frame": 100}

Team records:

    {"ball": {"x": [...], "y": [...], "mask": [...]},
     "players": [{"x": ..., "y": ..., "mask": ...}, ...],
     "label": "team_03", "game_id": "g0007", "possession_index": 12}

Floats are written with repr precision, so save then load is bit-exact.
Frames whose mask is 0 must carry exactly 0.0 in both coordinates.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from trajnet_utils import io

from .errors import DatasetFormatError, ShapeError
from .tensor import SignalTensor

FORMAT_VERSION = 1
TASKS = ("event", "team")


# =============================================================================
# Coordinates
# =============================================================================

@dataclass(frozen=True)
class CoordinateBounds:
    """Playing-surface extent; normalize() maps it onto [-1, 1]^2."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ShapeError(f"degenerate coordinate bounds {self.as_list()}")

    def as_list(self) -> list[float]:
        return [self.xmin, self.xmax, self.ymin, self.ymax]

    def normalize(self, xy: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Affine map of (..., 2, T) coordinates; absent frames stay exactly 0."""
        lo = np.array([self.xmin, self.ymin])[:, None]
        span = np.array([self.xmax - self.xmin, self.ymax - self.ymin])[:, None]
        out = 2.0 * (xy - lo) / span - 1.0
        return np.where(mask[..., None, :], out, 0.0)


# NHL rink in feet, centre ice at the origin; NBA court in feet, corner origin.
RINK_BOUNDS = CoordinateBounds(-100.0, 100.0, -42.5, 42.5)
COURT_BOUNDS = CoordinateBounds(0.0, 94.0, 0.0, 50.0)


# =============================================================================
# Samples
# =============================================================================

def _as_track(xy, mask, expected: tuple) -> tuple[np.ndarray, np.ndarray]:
    xy = np.array(xy, dtype=np.float64)
    mask = np.array(mask, dtype=bool)
    if xy.shape != expected:
        raise ShapeError(f"coordinates have shape {xy.shape}, expected {expected}")
    if mask.shape != expected[:-2] + expected[-1:]:
        raise ShapeError(f"mask has shape {mask.shape}, expected {expected[:-2] + expected[-1:]}")
    if not np.all(np.isfinite(xy)):
        raise ShapeError("coordinates must be finite")
    absent = ~mask[..., None, :]
    if np.any(np.where(absent, xy, 0.0) != 0.0):
        raise ShapeError("absent frames must carry 0.0 in both coordinates")
    return xy, mask


@dataclass(eq=False)
class TrajectorySample:
    """One event window: Np person slots of T frames."""

    xy: np.ndarray      # (Np, 2, T)
    mask: np.ndarray    # (Np, T)
    label: int
    key: int | None = None
    game_id: str = ""
    center_frame: int = 0

    def __post_init__(self):
        xy = np.asarray(self.xy)
        if xy.ndim != 3:
            raise ShapeError(f"TrajectorySample coordinates need shape (Np, 2, T), got {xy.shape}")
        self.xy, self.mask = _as_track(xy, self.mask, (xy.shape[0], 2, xy.shape[2]))
        if self.key is not None and not 0 <= self.key < self.num_persons:
            raise ShapeError(f"key index {self.key} outside 0..{self.num_persons - 1}")

    @property
    def num_persons(self) -> int:
        return self.xy.shape[0]

    @property
    def length(self) -> int:
        return self.xy.shape[2]

    def person(self, p: int) -> SignalTensor:
        return SignalTensor(self.xy[p])

    def is_present(self, p: int) -> bool:
        return bool(self.mask[p].any())

    def present_persons(self) -> list[int]:
        return [p for p in range(self.num_persons) if self.is_present(p)]

    def permuted(self, order: list[int]) -> "TrajectorySample":
        """Same sample with person slots stored in `order`; key follows its person."""
        order = list(order)
        key = None if self.key is None else order.index(self.key)
        return TrajectorySample(self.xy[order], self.mask[order], self.label, key,
                                self.game_id, self.center_frame)


@dataclass(eq=False)
class PossessionSample:
    """One possession: ball track plus Np player tracks of T frames."""

    ball_xy: np.ndarray        # (2, T)
    ball_mask: np.ndarray      # (T,)
    players_xy: np.ndarray     # (Np, 2, T)
    players_mask: np.ndarray   # (Np, T)
    label: int
    game_id: str = ""
    possession_index: int = 0

    def __post_init__(self):
        players = np.asarray(self.players_xy)
        if players.ndim != 3:
            raise ShapeError(f"PossessionSample players need shape (Np, 2, T), got {players.shape}")
        length = players.shape[2]
        self.players_xy, self.players_mask = _as_track(players, self.players_mask, (players.shape[0], 2, length))
        self.ball_xy, self.ball_mask = _as_track(self.ball_xy, self.ball_mask, (2, length))

    @property
    def num_players(self) -> int:
        return self.players_xy.shape[0]

    @property
    def length(self) -> int:
        return self.players_xy.shape[2]

    def permuted(self, order: list[int]) -> "PossessionSample":
        order = list(order)
        return PossessionSample(self.ball_xy, self.ball_mask, self.players_xy[order],
                                self.players_mask[order], self.label, self.game_id,
                                self.possession_index)


# =============================================================================
# Datasets
# =============================================================================

@dataclass(frozen=True)
class DatasetHeader:
    task: str
    np: int
    t: int
    bounds: CoordinateBounds
    classes: tuple[str, ...]
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.task not in TASKS:
            raise DatasetFormatError(f"unknown task {self.task!r}; expected one of {TASKS}", line=1)
        if self.np < 1 or self.t < 1:
            raise DatasetFormatError(f"np and t must be >= 1, got np={self.np} t={self.t}", line=1)
        if len(set(self.classes)) != len(self.classes) or not self.classes:
            raise DatasetFormatError("class list must be non-empty and unique", line=1)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "task": self.task,
            "np": self.np,
            "t": self.t,
            "bounds": self.bounds.as_list(),
            "classes": list(self.classes),
        }


@dataclass
class Dataset:
    header: DatasetHeader
    samples: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def game_ids(self) -> list[str]:
        return [s.game_id for s in self.samples]

    def subset(self, indices) -> "Dataset":
        return Dataset(self.header, [self.samples[i] for i in indices])


def _track_record(xy: np.ndarray, mask: np.ndarray) -> dict:
    return {"x": xy[0].tolist(), "y": xy[1].tolist(), "mask": mask.astype(int).tolist()}


def sample_to_record(sample, header: DatasetHeader) -> dict:
    if header.task == "event":
        return {
            "persons": [_track_record(sample.xy[p], sample.mask[p]) for p in range(sample.num_persons)],
            "label": header.classes[sample.label],
            "key": sample.key,
            "game_id": sample.game_id,
            "center_frame": int(sample.center_frame),
        }
    return {
        "ball": _track_record(sample.ball_xy, sample.ball_mask),
        "players": [_track_record(sample.players_xy[p], sample.players_mask[p]) for p in range(sample.num_players)],
        "label": header.classes[sample.label],
        "game_id": sample.game_id,
        "possession_index": int(sample.possession_index),
    }


def _parse_track(rec: dict, t: int) -> tuple[list, list]:
    x, y, mask = rec["x"], rec["y"], rec["mask"]
    if not (len(x) == len(y) == len(mask) == t):
        raise ShapeError(f"series lengths x={len(x)} y={len(y)} mask={len(mask)} do not match T={t}")
    return [x, y], mask


def record_to_sample(rec: dict, header: DatasetHeader):
    label_name = rec["label"]
    if label_name not in header.classes:
        raise ShapeError(f"unknown class label {label_name!r}")
    label = header.classes.index(label_name)
    if header.task == "event":
        persons = rec["persons"]
        if len(persons) != header.np:
            raise ShapeError(f"record has {len(persons)} persons, header declares Np={header.np}")
        tracks = [_parse_track(p, header.t) for p in persons]
        return TrajectorySample(
            xy=[xy for xy, _ in tracks],
            mask=[m for _, m in tracks],
            label=label,
            key=rec.get("key"),
            game_id=str(rec.get("game_id", "")),
            center_frame=int(rec.get("center_frame", 0)),
        )
    players = rec["players"]
    if len(players) != header.np:
        raise ShapeError(f"record has {len(players)} players, header declares Np={header.np}")
    tracks = [_parse_track(p, header.t) for p in players]
    ball_xy, ball_mask = _parse_track(rec["ball"], header.t)
    return PossessionSample(
        ball_xy=ball_xy,
        ball_mask=ball_mask,
        players_xy=[xy for xy, _ in tracks],
        players_mask=[m for _, m in tracks],
        label=label,
        game_id=str(rec.get("game_id", "")),
        possession_index=int(rec.get("possession_index", 0)),
    )


def header_from_dict(d: dict) -> DatasetHeader:
    try:
        version = int(d["format_version"])
        if version != FORMAT_VERSION:
            raise DatasetFormatError(f"unsupported format_version {version}; this build reads {FORMAT_VERSION}", line=1)
        return DatasetHeader(
            task=d["task"],
            np=int(d["np"]),
            t=int(d["t"]),
            bounds=CoordinateBounds(*[float(v) for v in d["bounds"]]),
            classes=tuple(d["classes"]),
            format_version=version,
        )
    except DatasetFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"bad header: {e}", line=1) from None


def dumps_dataset(dataset: Dataset) -> str:
    lines = [json.dumps(dataset.header.to_dict())]
    for sample in dataset.samples:
        lines.append(json.dumps(sample_to_record(sample, dataset.header), allow_nan=False))
    return "".join(line + "\n" for line in lines)


def save_dataset(dataset: Dataset, path: str | Path) -> str:
    uri = io.write_text(path, dumps_dataset(dataset))
    print(f"  -> Saved {Path(str(path)).name} ({len(dataset):,} {dataset.header.task} samples)")
    return uri


def loads_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DatasetFormatError("missing header line", line=1)
    try:
        header = header_from_dict(json.loads(lines[0]))
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"header is not JSON: {e}", line=1) from None

    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            samples.append(record_to_sample(json.loads(line), header))
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"record is not JSON: {e}", line=lineno) from None
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetFormatError(f"malformed record: {e}", line=lineno) from None
    return Dataset(header, samples)


def load_dataset(path: str | Path) -> Dataset:
    """Parse a dataset file; any invalid record fails the whole load."""
    return loads_dataset(io.read_text(path))

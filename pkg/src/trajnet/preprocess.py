"""Raw track tables to fixed-size samples.

Raw input is JSON, one game per object (or {"games": [...]}):

    {"game_id": "g01",
     "ball": {"frame": [...], "x": [...], "y": [...]} | null,
     "agents": {"17": {"team": "team_03", "frame": [...], "x": [...], "y": [...]}, ...},
     "events": [{"frame": 100, "label": "pass", "agent": "17", "key_known": true}, ...],
     "possessions": [{"start": 0, "end": 799, "team": "team_03", "players": ["17", ...]}, ...]}

Frames are native indices; a track may skip frames (gaps are absent frames).
Event windows take 7 frames before the center and 8 after (T = 16).
Possessions are sampled at even native frames, cropped backward from the last
frame to T = 200 and zero-padded at the front when short.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from trajnet_utils import io

from .errors import DatasetFormatError, MissingAgentError, ShapeError
from .models import position_near
from .records import PossessionSample, TrajectorySample

MIN_SEPARATION = 15
SAMPLE_STEP = 2


# =============================================================================
# Track tables
# =============================================================================

@dataclass
class Track:
    frames: np.ndarray   # sorted native frame indices
    x: np.ndarray
    y: np.ndarray
    team: str | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if not (self.frames.shape == self.x.shape == self.y.shape) or self.frames.ndim != 1:
            raise ShapeError("track frame, x and y arrays must be 1-D and equally long")
        if np.any(np.diff(self.frames) <= 0):
            raise ShapeError("track frames must be strictly increasing")

    def window(self, frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(2, len(frames)) positions and mask for the requested native frames."""
        frames = np.asarray(frames, dtype=np.int64)
        xy = np.zeros((2, len(frames)))
        mask = np.zeros(len(frames), dtype=bool)
        if len(self.frames):
            pos = np.minimum(np.searchsorted(self.frames, frames), len(self.frames) - 1)
            mask = self.frames[pos] == frames
            xy[0, mask] = self.x[pos[mask]]
            xy[1, mask] = self.y[pos[mask]]
        return xy, mask


@dataclass(frozen=True)
class EventMark:
    frame: int
    label: str
    agent: str
    key_known: bool = True


@dataclass(frozen=True)
class PossessionMark:
    start: int
    end: int                 # inclusive; the possession-ending shot frame
    team: str
    players: tuple[str, ...] = ()


@dataclass
class TrackTable:
    game_id: str
    agents: dict[str, Track]
    ball: Track | None = None
    events: list[EventMark] = field(default_factory=list)
    possessions: list[PossessionMark] = field(default_factory=list)


def _track_from_dict(d: dict) -> Track:
    return Track(d["frame"], d["x"], d["y"], d.get("team"))


def table_from_dict(d: dict) -> TrackTable:
    try:
        return TrackTable(
            game_id=str(d["game_id"]),
            agents={str(k): _track_from_dict(v) for k, v in d.get("agents", {}).items()},
            ball=_track_from_dict(d["ball"]) if d.get("ball") else None,
            events=[EventMark(int(e["frame"]), e["label"], str(e["agent"]), bool(e.get("key_known", True)))
                    for e in d.get("events", [])],
            possessions=[PossessionMark(int(p["start"]), int(p["end"]), str(p["team"]),
                                        tuple(str(a) for a in p.get("players", ())))
                         for p in d.get("possessions", [])],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"bad raw track table: {e}") from None


def load_track_tables(path: str | Path) -> list[TrackTable]:
    try:
        raw = json.loads(io.read_text(path))
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{path}: not JSON ({e})") from None
    games = raw["games"] if isinstance(raw, dict) and "games" in raw else raw
    if isinstance(games, dict):
        games = [games]
    return [table_from_dict(g) for g in games]


# =============================================================================
# Event windows
# =============================================================================

def agent_sort_key(agent_id: str) -> tuple:
    """Numeric ids in numeric order ("9" before "10"), then the rest by string."""
    return (0, int(agent_id), "") if agent_id.isdigit() else (1, 0, agent_id)


def isolated_events(events: list[EventMark], min_separation: int = MIN_SEPARATION) -> list[EventMark]:
    """Events whose center is more than `min_separation` frames from every other center.

    Both members of a close pair are dropped, so the result does not depend
    on event order.
    """
    frames = np.array([e.frame for e in events], dtype=np.int64)
    kept = []
    for i, event in enumerate(events):
        gaps = np.abs(frames - event.frame)
        gaps[i] = min_separation + 1
        if np.all(gaps > min_separation):
            kept.append(event)
    return kept


def window_events(table: TrackTable, events: list[EventMark] | None = None, classes: tuple[str, ...] = (),
                  np_persons: int = 5, t: int = 16, min_separation: int = MIN_SEPARATION) -> list[TrajectorySample]:
    """One T-frame sample per isolated event: the key plus its Np - 1 nearest agents.

    Windows reaching past either end of the tracks are zero-padded and
    masked. Events whose key agent is absent from the whole window are
    dropped with a log line.
    """
    events = table.events if events is None else events
    before = (t - 1) // 2
    samples = []
    kept = isolated_events(events, min_separation)
    dropped_close = len(events) - len(kept)
    dropped_absent = 0

    for event in kept:
        if event.label not in classes:
            raise DatasetFormatError(f"game {table.game_id}: unknown event label {event.label!r}")
        if event.agent not in table.agents:
            raise MissingAgentError(f"game {table.game_id}: event at frame {event.frame} names unknown agent {event.agent!r}")
        frames = np.arange(event.frame - before, event.frame - before + t)
        key_xy, key_mask = table.agents[event.agent].window(frames)
        if not key_mask.any():
            dropped_absent += 1
            continue

        anchor = position_near(key_xy, key_mask, before)
        others = []
        for agent_id in sorted(table.agents, key=agent_sort_key):
            if agent_id == event.agent:
                continue
            xy, mask = table.agents[agent_id].window(frames)
            pos = position_near(xy, mask, before)
            if pos is not None:
                others.append((float(np.hypot(*(pos - anchor))), agent_id, xy, mask))
        others.sort(key=lambda o: (o[0], agent_sort_key(o[1])))

        xy = np.zeros((np_persons, 2, t))
        mask = np.zeros((np_persons, t), dtype=bool)
        xy[0], mask[0] = key_xy, key_mask
        for slot, (_, _, oxy, omask) in enumerate(others[:np_persons - 1], start=1):
            xy[slot], mask[slot] = oxy, omask
        samples.append(TrajectorySample(
            xy, mask, classes.index(event.label),
            key=0 if event.key_known else None,
            game_id=table.game_id,
            center_frame=event.frame,
        ))

    if dropped_close or dropped_absent:
        print(f"  {table.game_id}: dropped {dropped_close} events within {min_separation} frames of another, "
              f"{dropped_absent} with an absent key")
    return samples


# =============================================================================
# Possessions
# =============================================================================

def sampled_frames(start: int, end: int, step: int = SAMPLE_STEP) -> np.ndarray:
    """Native frames kept by half-rate sampling: multiples of `step` in [start, end]."""
    first = start + (-start) % step
    return np.arange(first, end + 1, step, dtype=np.int64)


def _possession_players(table: TrackTable, mark: PossessionMark, frames: np.ndarray, np_players: int) -> list[str]:
    if mark.players:
        missing = [a for a in mark.players if a not in table.agents]
        if missing:
            raise MissingAgentError(f"game {table.game_id}: possession names unknown agents {missing}")
        return list(mark.players[:np_players])
    counts = []
    for agent_id, track in table.agents.items():
        if track.team != mark.team:
            continue
        present = int(track.window(frames)[1].sum())
        if present:
            counts.append((-present, agent_sort_key(agent_id), agent_id))
    return [agent_id for _, _, agent_id in sorted(counts)[:np_players]]


def extract_possessions(table: TrackTable, marks: list[PossessionMark] | None = None, classes: tuple[str, ...] = (),
                        np_players: int = 5, t: int = 200, step: int = SAMPLE_STEP) -> list[PossessionSample]:
    """One PossessionSample of exactly T frames per mark; the label is the offensive team."""
    marks = table.possessions if marks is None else marks
    samples = []
    for index, mark in enumerate(marks):
        if mark.team not in classes:
            raise DatasetFormatError(f"game {table.game_id}: unknown team label {mark.team!r}")
        frames = sampled_frames(mark.start, mark.end, step)
        if frames.size == 0:
            raise ShapeError(f"game {table.game_id}: possession {index} ({mark.start}..{mark.end}) has zero frames")
        frames = frames[-t:]
        pad = t - frames.size

        if table.ball is None:
            raise MissingAgentError(f"game {table.game_id}: no ball track")
        ball_xy, ball_mask = table.ball.window(frames)
        if not ball_mask.any():
            raise MissingAgentError(f"game {table.game_id}: ball absent throughout possession {index}")

        players_xy = np.zeros((np_players, 2, t))
        players_mask = np.zeros((np_players, t), dtype=bool)
        for slot, agent_id in enumerate(_possession_players(table, mark, frames, np_players)):
            xy, mask = table.agents[agent_id].window(frames)
            players_xy[slot, :, pad:], players_mask[slot, pad:] = xy, mask

        full_ball_xy = np.zeros((2, t))
        full_ball_mask = np.zeros(t, dtype=bool)
        full_ball_xy[:, pad:], full_ball_mask[pad:] = ball_xy, ball_mask
        samples.append(PossessionSample(
            full_ball_xy, full_ball_mask, players_xy, players_mask,
            classes.index(mark.team), game_id=table.game_id, possession_index=index,
        ))
    return samples

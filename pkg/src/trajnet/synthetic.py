"""Synthetic multi-agent plays standing in for tracked game data.

Event samples: each class is drawn from its own kinematic motif on a
200 x 85 ft rink, so the label is exact. Team samples: each fictional team
has a StyleProfile (formation, speed, pass tempo, waypoint routes) and its
possessions are sampled from it on a 94 x 50 ft court.

Generation is split into units (one game, or one team within a game). Each
unit draws from its own child of SeedSequence(seed), and units are
concatenated in unit order, so the output does not depend on worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .losses import EVENT_CLASSES
from .models import center_frame
from .records import (COURT_BOUNDS, RINK_BOUNDS, CoordinateBounds, Dataset, DatasetHeader,
                      PossessionSample, TrajectorySample)

# passes dominate, the rarer classes split the rest
DEFAULT_EVENT_MIX = {
    "pass": 0.50,
    "dump_out": 0.08,
    "dump_in": 0.07,
    "shot": 0.10,
    "carry": 0.15,
    "puck_protection": 0.10,
}
EVENT_GAMES = 8
POSSESSIONS_PER_GAME = 20
MIN_POSSESSION_FRAMES = 120
MAX_POSSESSION_FRAMES = 260
BASKET = np.array([88.75, 25.0])
SHOT_FRAMES = 8


# =============================================================================
# Class counts
# =============================================================================

def allocate_counts(n: int, mix: dict[str, float], classes: tuple[str, ...]) -> list[int]:
    """Largest-remainder split of n samples; ties go to the earlier class."""
    weights = np.array([float(mix.get(c, 0.0)) for c in classes])
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ConfigError(f"class mix must be non-negative with positive total, got {mix}")
    unknown = set(mix) - set(classes)
    if unknown:
        raise ConfigError(f"class mix names unknown classes {sorted(unknown)}")
    quotas = n * weights / weights.sum()
    counts = np.floor(quotas).astype(int)
    order = sorted(range(len(classes)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:n - counts.sum()]:
        counts[i] += 1
    return counts.tolist()


def parse_mix(text: str, classes: tuple[str, ...] = EVENT_CLASSES,
              base: dict[str, float] = DEFAULT_EVENT_MIX) -> dict[str, float]:
    """`pass=0.5,shot=0.2`: named classes fixed, the rest share the remainder like `base`."""
    fixed = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in classes:
            raise ConfigError(f"--mix names unknown class {name!r}")
        try:
            fixed[name] = float(value)
        except ValueError:
            raise ConfigError(f"--mix value for {name!r} is not a number: {value!r}") from None
    total = sum(fixed.values())
    if total > 1.0 + 1e-12 or any(v < 0 for v in fixed.values()):
        raise ConfigError(f"--mix fractions must be >= 0 and sum to <= 1, got {fixed}")
    rest = [c for c in classes if c not in fixed]
    rest_base = sum(base.get(c, 0.0) for c in rest)
    mix = dict(fixed)
    for c in rest:
        mix[c] = (1.0 - total) * (base.get(c, 0.0) / rest_base if rest_base else 1.0 / len(rest))
    return mix


def _spawn(seed: int, n: int) -> tuple[np.random.Generator, list[np.random.SeedSequence]]:
    """A generator for the main process plus n child seeds, one per unit."""
    root, *children = np.random.SeedSequence(seed).spawn(n + 1)
    return np.random.default_rng(root), children


def _run_units(fn, units: list, workers: int) -> list:
    if workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, units))
    return [fn(u) for u in units]


# =============================================================================
# Event motifs
# =============================================================================

@dataclass
class EventMotif:
    xy: np.ndarray            # (Np, 2, T), key in slot 0
    partner: int | None = None


def _polar(radius, angle) -> np.ndarray:
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)


def render_event(label: str, rng: np.random.Generator, np_persons: int = 5, t: int = 16) -> EventMotif:
    """Noise-free tracks for one event; the key acts in slot 0."""
    frames = np.arange(t, dtype=np.float64)
    c = center_frame(t)
    side = rng.choice([-1.0, 1.0])  # attacking direction along x
    heading = rng.uniform(0.0, 2 * np.pi)
    direction = np.array([np.cos(heading), np.sin(heading)])

    key_start = np.array([rng.uniform(-50.0, 50.0), rng.uniform(-10.0, 10.0)])
    anchor = key_start
    starts = key_start + _polar(rng.uniform(6.0, 20.0, np_persons), rng.uniform(0.0, 2 * np.pi, np_persons))
    drift = _polar(rng.uniform(0.0, 0.4, np_persons), rng.uniform(0.0, 2 * np.pi, np_persons))
    xy = starts[:, :, None] + drift[:, :, None] * frames
    partner = None

    before = np.minimum(frames, c)
    after = np.maximum(frames - c, 0.0)

    if label == "pass":
        v = direction * rng.uniform(0.6, 1.0)
        xy[0] = key_start[:, None] + v[:, None] * before + 0.3 * v[:, None] * after
        if np_persons > 1:
            partner = 1
            at_center = xy[1][:, c].copy()
            xy[1] = np.where(frames <= c, xy[1], at_center[:, None] + v[:, None] * after)
    elif label == "shot":
        key_start = np.array([side * rng.uniform(45.0, 70.0), rng.uniform(-15.0, 15.0)])
        to_goal = np.array([side * 89.0, 0.0]) - key_start
        to_goal /= np.linalg.norm(to_goal)
        speed = 0.4 + 0.08 * frames
        travel = np.concatenate([[0.0], np.cumsum(speed[:-1])])
        xy[0] = key_start[:, None] + to_goal[:, None] * travel
    elif label == "carry":
        v = direction * rng.uniform(0.8, 1.1)
        xy[0] = key_start[:, None] + v[:, None] * frames
    elif label in ("dump_out", "dump_in"):
        if label == "dump_out":
            key_start = np.array([side * rng.uniform(-75.0, -55.0), rng.uniform(-20.0, 20.0)])
            target = np.array([0.0, key_start[1]])
        else:
            key_start = np.array([side * rng.uniform(10.0, 30.0), rng.uniform(-15.0, 15.0)])
            target = np.array([side * 100.0, rng.choice([-35.0, 35.0])])
        heading_v = target - key_start
        v = 2.0 * heading_v / np.linalg.norm(heading_v)
        xy[0] = key_start[:, None] + v[:, None] * before + 0.3 * v[:, None] * after
    elif label == "puck_protection":
        radius = rng.uniform(2.0, 3.0)
        omega = rng.choice([-1.0, 1.0]) * rng.uniform(0.25, 0.35)
        phase = rng.uniform(0.0, 2 * np.pi)
        angle = omega * frames + phase
        xy[0] = key_start[:, None] + radius * np.stack([np.cos(angle), np.sin(angle)])
        if np_persons > 1:
            partner = 1
            gap = rng.uniform(3.0, 4.0)
            xy[1] = key_start[:, None] + (radius + gap) * np.stack([np.cos(angle + 0.5), np.sin(angle + 0.5)])
    else:
        raise ConfigError(f"no motif for event class {label!r}")
    if label in ("shot", "dump_out", "dump_in"):
        # bystanders stay grouped around wherever the key starts
        xy[1:] += (key_start - anchor)[None, :, None]
    return EventMotif(xy, partner)


def _drop_tracks(mask: np.ndarray, rng: np.random.Generator, absent_prob: float) -> None:
    """Non-key persons vanish entirely or for a leading or trailing run of frames."""
    n_persons, t = mask.shape
    for p in range(1, n_persons):
        if rng.random() >= absent_prob:
            continue
        kind = rng.integers(3)
        if kind == 0:
            mask[p] = False
        elif kind == 1:
            mask[p, rng.integers(1, t):] = False
        else:
            mask[p, :rng.integers(1, t)] = False


def _clip(xy: np.ndarray, bounds: CoordinateBounds) -> np.ndarray:
    out = xy.copy()
    out[..., 0, :] = np.clip(out[..., 0, :], bounds.xmin, bounds.xmax)
    out[..., 1, :] = np.clip(out[..., 1, :], bounds.ymin, bounds.ymax)
    return out


@dataclass(frozen=True)
class _EventUnit:
    game_id: str
    labels: tuple[int, ...]
    seed: np.random.SeedSequence
    classes: tuple[str, ...]
    np_persons: int
    t: int
    noise_std: float
    absent_prob: float
    bounds: CoordinateBounds


def _render_event_unit(unit: _EventUnit) -> list[TrajectorySample]:
    rng = np.random.default_rng(unit.seed)
    samples = []
    for i, label in enumerate(unit.labels):
        motif = render_event(unit.classes[label], rng, unit.np_persons, unit.t)
        perm = rng.permutation(unit.np_persons)
        xy = motif.xy[perm]
        key = int(np.flatnonzero(perm == 0)[0])
        mask = np.ones((unit.np_persons, unit.t), dtype=bool)
        if unit.absent_prob > 0:
            _drop_tracks(mask, rng, unit.absent_prob)
        mask = mask[perm]
        if unit.noise_std > 0:
            xy = xy + rng.normal(0.0, unit.noise_std, xy.shape)
        xy = np.where(mask[:, None, :], _clip(xy, unit.bounds), 0.0)
        samples.append(TrajectorySample(xy, mask, int(label), key=key, game_id=unit.game_id,
                                        center_frame=100 + 40 * i))
    return samples


def generate_events(seed: int, n_samples: int, class_mix: dict[str, float] | None = None,
                    noise_std: float = 0.0, absent_prob: float = 0.0, np_persons: int = 5, t: int = 16,
                    n_games: int = EVENT_GAMES, workers: int = 1) -> Dataset:
    """Event dataset with exact class counts for `class_mix`, spread round-robin over games."""
    if n_samples < 0 or n_games < 1:
        raise ConfigError(f"need n_samples >= 0 and n_games >= 1, got {n_samples}, {n_games}")
    if not 0.0 <= absent_prob <= 1.0 or noise_std < 0:
        raise ConfigError("absent_prob must lie in [0, 1] and noise_std must be >= 0")
    classes = EVENT_CLASSES
    counts = allocate_counts(n_samples, class_mix or DEFAULT_EVENT_MIX, classes)
    rng, seeds = _spawn(seed, n_games)
    labels = rng.permutation(np.repeat(np.arange(len(classes)), counts))
    units = [
        _EventUnit(f"g{g:02d}", tuple(int(v) for v in labels[g::n_games]), seeds[g], classes,
                   np_persons, t, noise_std, absent_prob, RINK_BOUNDS)
        for g in range(n_games)
    ]
    samples = [s for chunk in _run_units(_render_event_unit, units, workers) for s in chunk]
    header = DatasetHeader("event", np_persons, t, RINK_BOUNDS, classes)
    return Dataset(header, samples)


# =============================================================================
# Team styles
# =============================================================================

@dataclass(frozen=True)
class StyleProfile:
    """Collective dynamics of one fictional team."""

    name: str
    lane_angles: tuple[float, ...]        # formation rotations, radians
    speed_mean: float                     # formation speed, ft per sampled frame
    speed_std: float
    pass_tempo: int                       # sampled frames between ball transfers
    spread: float                         # formation radius, ft
    motifs: tuple[tuple[tuple[float, float], ...], ...]   # waypoint routes, ft

    def signature(self) -> tuple:
        return (self.lane_angles, self.speed_mean, self.speed_std, self.pass_tempo, self.spread, self.motifs)


def make_profiles(n_teams: int, seed: int = 0, n_motifs: int = 3) -> list[StyleProfile]:
    """Well-separated profiles: speed, tempo, spread and lanes spaced evenly per team."""
    if n_teams < 2:
        raise ConfigError(f"need at least 2 teams, got {n_teams}")
    rng = np.random.default_rng(seed)
    order = [rng.permutation(n_teams) for _ in range(4)]
    profiles = []
    for i in range(n_teams):
        frac = [o[i] / max(n_teams - 1, 1) for o in order]
        lane = float(-np.pi / 2 + np.pi * frac[0])
        routes = []
        for _ in range(n_motifs):
            start_y = float(rng.uniform(10.0, 40.0))
            mid_angle = lane + float(rng.normal(0.0, 0.2))
            mid = (float(np.clip(47.0 + 20.0 * np.cos(mid_angle), 30.0, 75.0)),
                   float(np.clip(25.0 + 18.0 * np.sin(mid_angle), 5.0, 45.0)))
            end = (float(rng.uniform(70.0, 85.0)), float(np.clip(25.0 + 15.0 * np.sin(lane), 5.0, 45.0)))
            routes.append(((20.0, start_y), mid, end))
        profiles.append(StyleProfile(
            name=f"team_{i:02d}",
            lane_angles=(lane, lane + np.pi / 5),
            speed_mean=0.35 + 0.5 * frac[1],
            speed_std=0.05,
            pass_tempo=int(round(6 + 18 * frac[2])),
            spread=6.0 + 10.0 * frac[3],
            motifs=tuple(routes),
        ))
    return profiles


def _follow_route(points: np.ndarray, speed: float, length: int) -> np.ndarray:
    """(2, length) positions walking the polyline at constant speed, holding at the end."""
    seg = np.diff(points, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    dist = np.minimum(np.arange(length) * speed, cum[-1])
    x = np.interp(dist, cum, points[:, 0])
    y = np.interp(dist, cum, points[:, 1])
    return np.stack([x, y])


def render_possession(profile: StyleProfile, rng: np.random.Generator, np_players: int = 5,
                      length: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sampled-rate (ball (2, L), players (Np, 2, L)) tracks, ending with a shot."""
    if length is None:
        length = int(rng.integers(MIN_POSSESSION_FRAMES, MAX_POSSESSION_FRAMES + 1))
    route = np.array(profile.motifs[rng.integers(len(profile.motifs))]) + rng.normal(0.0, 1.5, (3, 2))
    speed = max(0.1, rng.normal(profile.speed_mean, profile.speed_std))
    center = _follow_route(route, speed, length)

    lane = profile.lane_angles[rng.integers(len(profile.lane_angles))]
    slots = lane + 2 * np.pi * np.arange(np_players) / np_players
    radius = profile.spread * (1.0 + 0.1 * rng.standard_normal(np_players))
    offsets = _polar(radius, slots)  # (Np, 2)
    frames = np.arange(length)
    freq = rng.uniform(0.02, 0.06, (np_players, 2, 1))
    phase = rng.uniform(0.0, 2 * np.pi, (np_players, 2, 1))
    wander = 1.5 * np.sin(2 * np.pi * freq * frames + phase)
    players = center[None] + offsets[:, :, None] + wander

    carriers = np.zeros(length, dtype=int)
    holder = int(rng.integers(np_players))
    next_pass = max(1, profile.pass_tempo + int(rng.integers(-2, 3)))
    for f in range(length):
        if f == next_pass:
            holder = int((holder + rng.integers(1, np_players)) % np_players) if np_players > 1 else holder
            next_pass = f + max(1, profile.pass_tempo + int(rng.integers(-2, 3)))
        carriers[f] = holder
    ball = players[carriers, :, frames].T.copy()  # (2, L)
    ball[1] += 0.5

    shot = min(SHOT_FRAMES, length)
    start = ball[:, length - shot].copy()
    w = np.linspace(0.0, 1.0, shot)
    ball[:, length - shot:] = start[:, None] * (1 - w) + BASKET[:, None] * w
    return ball, players


def _fit_length(xy: np.ndarray, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep the last t frames; zero-pad short tracks at the front."""
    length = xy.shape[-1]
    kept = xy[..., -t:]
    pad = t - kept.shape[-1]
    out = np.zeros(xy.shape[:-1] + (t,))
    out[..., pad:] = kept
    mask = np.zeros(xy.shape[:-2] + (t,), dtype=bool)
    mask[..., pad:] = length > 0
    return out, mask


@dataclass(frozen=True)
class _PossessionUnit:
    game_id: str
    team: int
    count: int
    first_index: int
    seed: np.random.SeedSequence
    profile: StyleProfile
    np_players: int
    t: int
    noise_std: float


def _render_possession_unit(unit: _PossessionUnit) -> list[PossessionSample]:
    rng = np.random.default_rng(unit.seed)
    samples = []
    for i in range(unit.count):
        ball, players = render_possession(unit.profile, rng, unit.np_players)
        if unit.noise_std > 0:
            ball = ball + rng.normal(0.0, unit.noise_std, ball.shape)
            players = players + rng.normal(0.0, unit.noise_std, players.shape)
        ball_xy, ball_mask = _fit_length(_clip(ball, COURT_BOUNDS), unit.t)
        players_xy, players_mask = _fit_length(_clip(players, COURT_BOUNDS), unit.t)
        samples.append(PossessionSample(ball_xy, ball_mask, players_xy, players_mask, unit.team,
                                        game_id=unit.game_id, possession_index=unit.first_index + i))
    return samples


def schedule_games(n_teams: int, n_per_team: int, per_game: int, rng: np.random.Generator) -> list[list[tuple[int, int]]]:
    """Rounds of games; each game lists (team, possessions) for the two teams it pairs."""
    rounds = []
    remaining = [n_per_team] * n_teams
    while any(remaining):
        perm = [int(i) for i in rng.permutation(n_teams) if remaining[i]]
        games = []
        for a in range(0, len(perm), 2):
            game = []
            for team in perm[a:a + 2]:
                n = min(per_game, remaining[team])
                remaining[team] -= n
                game.append((team, n))
            games.append(game)
        rounds.append(games)
    return rounds


def generate_possessions(seed: int, profiles: list[StyleProfile], n_per_team: int,
                         per_game: int = POSSESSIONS_PER_GAME, np_players: int = 5, t: int = 200,
                         noise_std: float = 0.0, workers: int = 1) -> Dataset:
    """Exactly n_per_team possessions per profile, grouped into two-team games."""
    if len(profiles) < 2:
        raise ConfigError(f"need at least 2 style profiles, got {len(profiles)}")
    signatures = [p.signature() for p in profiles]
    names = [p.name for p in profiles]
    if len(set(signatures)) != len(signatures) or len(set(names)) != len(names):
        raise ConfigError("style profiles must be pairwise distinct")
    if n_per_team < 0 or per_game < 1:
        raise ConfigError(f"need n_per_team >= 0 and per_game >= 1, got {n_per_team}, {per_game}")

    schedule_seq, unit_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(schedule_seq)
    units_spec = []
    index = 0
    for r, games in enumerate(schedule_games(len(profiles), n_per_team, per_game, rng)):
        for g, game in enumerate(games):
            game_id = f"r{r:03d}g{g:02d}"
            for team, count in game:
                units_spec.append((game_id, team, count, index))
                index += count
    seeds = unit_seq.spawn(len(units_spec))
    units = [_PossessionUnit(gid, team, count, first, seeds[u], profiles[team], np_players, t, noise_std)
             for u, (gid, team, count, first) in enumerate(units_spec)]
    samples = [s for chunk in _run_units(_render_possession_unit, units, workers) for s in chunk]
    header = DatasetHeader("team", np_players, t, COURT_BOUNDS, tuple(names))
    return Dataset(header, samples)

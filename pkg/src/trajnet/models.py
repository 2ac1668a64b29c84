"""The shared-compare and stacked trajectory networks.

Both networks take world-coordinate samples, canonicalize agent order by
spatial proximity (to the key person, or to the ball), normalize coordinates
into [-1, 1]^2 with the dataset's bounds, and run batched float64 forwards.
Every model exposes the same surface: logits / predict_proba / loss /
loss_and_backward / activation_pattern / tied / params.
"""

from dataclasses import dataclass

import numpy as np

from .architectures import ModelConfig, SharedCompareConfig, StackedConfig, config_from_dict
from .errors import BackwardBeforeForwardError, MissingAgentError, ShapeError
from .layers import FullyConnected, LayerSpec, ParamStore, build_stack, glorot_uniform
from .losses import LossWeights, batch_loss_and_grad, softmax
from .records import CoordinateBounds, PossessionSample, TrajectorySample
from .tensor import SignalTensor, stack_channels

PREDICT_BATCH = 256


# =============================================================================
# Proximity ordering
# =============================================================================

@dataclass(frozen=True)
class PersonOrdering:
    """Storage indices in model order; the key person comes first."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ShapeError(f"ordering {order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    @property
    def key(self) -> int:
        return self.order[0]

    def __len__(self) -> int:
        return len(self.order)


def center_frame(length: int) -> int:
    """Frame 8 of a 16-frame window (0-based index 7)."""
    return (length - 1) // 2


def position_near(xy: np.ndarray, mask: np.ndarray, frame: int) -> np.ndarray | None:
    """Position at `frame`, else at the nearest present frame (earlier wins ties)."""
    present = np.flatnonzero(mask)
    if present.size == 0:
        return None
    nearest = present[np.argmin(np.abs(present - frame))]
    return xy[:, nearest]


def proximity_order(sample: TrajectorySample, key: int) -> PersonOrdering:
    """Key first, then the others by ascending distance to it at the center frame.

    Fully absent persons go last; ties keep the smaller storage index first.
    """
    if not 0 <= key < sample.num_persons:
        raise ShapeError(f"key index {key} outside 0..{sample.num_persons - 1}")
    frame = center_frame(sample.length)
    anchor = position_near(sample.xy[key], sample.mask[key], frame)
    if anchor is None:
        raise MissingAgentError(f"key person {key} has no present frame")

    ranked = []
    for p in range(sample.num_persons):
        if p == key:
            continue
        pos = position_near(sample.xy[p], sample.mask[p], frame)
        if pos is None:
            ranked.append((1, 0.0, p))
        else:
            ranked.append((0, float(np.hypot(*(pos - anchor))), p))
    ranked.sort()
    return PersonOrdering((key,) + tuple(p for _, _, p in ranked))


def order_players(sample: PossessionSample) -> list[int]:
    """Players by ascending mean distance to the ball over frames where both are present.

    Ties fall back to the distance at the first shared frame, then to storage
    index. Players never present together with the ball go last.
    """
    if not sample.ball_mask.any():
        raise MissingAgentError("possession has no ball track")
    ranked = []
    for p in range(sample.num_players):
        both = sample.ball_mask & sample.players_mask[p]
        if not both.any():
            ranked.append((1, 0.0, 0.0, p))
            continue
        d = np.hypot(*(sample.players_xy[p][:, both] - sample.ball_xy[:, both]))
        ranked.append((0, float(d.mean()), float(d[0]), p))
    ranked.sort()
    return [p for *_, p in ranked]


# =============================================================================
# Encoding
# =============================================================================

def _normalize(xy: np.ndarray, mask: np.ndarray, bounds: CoordinateBounds | None) -> np.ndarray:
    return xy if bounds is None else bounds.normalize(xy, mask)


def encode_event(sample: TrajectorySample, ordering: PersonOrdering,
                 bounds: CoordinateBounds | None = None) -> np.ndarray:
    """(Np, 2, T) network input with persons in `ordering`."""
    if len(ordering) != sample.num_persons:
        raise ShapeError(f"ordering covers {len(ordering)} persons, sample has {sample.num_persons}")
    order = list(ordering.order)
    return _normalize(sample.xy[order], sample.mask[order], bounds)


def encode_possession(sample: PossessionSample, bounds: CoordinateBounds | None = None,
                      includes_ball: bool = True) -> np.ndarray:
    """(2 * (Np + 1), T) stacked input: ball first, then players by proximity."""
    order = order_players(sample)
    parts = []
    if includes_ball:
        parts.append(SignalTensor(_normalize(sample.ball_xy, sample.ball_mask, bounds)))
    for p in order:
        parts.append(SignalTensor(_normalize(sample.players_xy[p], sample.players_mask[p], bounds)))
    return stack_channels(parts).values


# =============================================================================
# Networks
# =============================================================================

class SharedCompareNet:
    """Shared stack per person, compare stack per (key, partner) pair, softmax head."""

    def __init__(self, cfg: SharedCompareConfig, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        self.params = ParamStore()
        self.shared = build_stack(list(cfg.shared), (2, cfg.t), self.params, "shared", rng)
        self.compare = build_stack(list(cfg.compare), cfg.compare_in_shape, self.params, "compare", rng)
        w = self.params.add("head.weight", glorot_uniform(rng, (cfg.head_in, cfg.num_classes),
                                                           cfg.head_in, cfg.num_classes))
        self.head = FullyConnected(LayerSpec.fc(cfg.num_classes), w)
        self.partners = list(range(cfg.np)) if cfg.self_pair else list(range(1, cfg.np))
        self._shapes = None

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1:] != self.cfg.input_shape:
            raise ShapeError(f"shared-compare expects (batch, {self.cfg.np}, 2, {self.cfg.t}), got {x.shape}")
        batch, n_persons = x.shape[:2]
        s = self.shared.forward(x.reshape(batch * n_persons, 2, self.cfg.t))
        channels, length = s.shape[1:]
        s = s.reshape(batch, n_persons, channels, length)

        n_pairs = len(self.partners)
        key = np.broadcast_to(s[:, :1], (batch, n_pairs, channels, length))
        pairs = np.concatenate([key, s[:, self.partners]], axis=2)
        c = self.compare.forward(pairs.reshape(batch * n_pairs, 2 * channels, length))
        self._shapes = (x.shape, s.shape, c.shape)
        return self.head.forward(c.reshape(batch, -1))

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients; returns dloss/dx of shape (B, Np, 2, T)."""
        if self._shapes is None:
            raise BackwardBeforeForwardError("shared-compare: backward called before forward")
        x_shape, s_shape, c_shape = self._shapes
        batch, n_persons, channels, length = s_shape
        n_pairs = len(self.partners)

        dc = self.head.backward(dlogits).reshape(c_shape)
        dpairs = self.compare.backward(dc).reshape(batch, n_pairs, 2 * channels, length)
        ds = np.zeros(s_shape)
        ds[:, 0] += dpairs[:, :, :channels].sum(axis=1)
        ds[:, self.partners] += dpairs[:, :, channels:]
        dx = self.shared.backward(ds.reshape(batch * n_persons, channels, length))
        return dx.reshape(x_shape)

    @property
    def stacks(self):
        return (self.shared, self.compare)

    # model surface shared with StackedNet

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def loss(self, x, labels, w: LossWeights) -> float:
        return batch_loss_and_grad(self.logits(x), labels, w)[0]

    def loss_and_backward(self, x, labels, w: LossWeights) -> tuple[float, np.ndarray]:
        loss, dlogits, _ = batch_loss_and_grad(self.logits(x), labels, w)
        return loss, self.backward(dlogits)

    def activation_pattern(self) -> list[np.ndarray]:
        return [p for stack in self.stacks for p in stack.activation_pattern()]

    @property
    def tied(self) -> bool:
        return any(stack.tied for stack in self.stacks)


class StackedNet:
    """Single conv stack over ball and player tracks stacked channel-wise."""

    def __init__(self, cfg: StackedConfig, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        self.params = ParamStore()
        self.net = build_stack(list(cfg.layers), cfg.input_shape, self.params, "stack", rng)

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ShapeError(f"stacked net expects (batch, {self.cfg.in_channels}, {self.cfg.t}), got {x.shape}")
        return self.net.forward(x)

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        return self.net.backward(dlogits)

    @property
    def stacks(self):
        return (self.net,)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def loss(self, x, labels, w: LossWeights) -> float:
        return batch_loss_and_grad(self.logits(x), labels, w)[0]

    def loss_and_backward(self, x, labels, w: LossWeights) -> tuple[float, np.ndarray]:
        loss, dlogits, _ = batch_loss_and_grad(self.logits(x), labels, w)
        return loss, self.backward(dlogits)

    def activation_pattern(self) -> list[np.ndarray]:
        return self.net.activation_pattern()

    @property
    def tied(self) -> bool:
        return self.net.tied


Model = SharedCompareNet | StackedNet


def build_model(cfg: ModelConfig, seed: int = 0) -> Model:
    if isinstance(cfg, SharedCompareConfig):
        return SharedCompareNet(cfg, seed)
    return StackedNet(cfg, seed)


def model_from_state(config: dict, state: dict[str, np.ndarray]) -> Model:
    model = build_model(config_from_dict(config))
    model.params.load_state(state)
    return model


# =============================================================================
# Single-sample inference
# =============================================================================

def shared_compare_forward(model: SharedCompareNet, sample: TrajectorySample, ordering: PersonOrdering,
                           bounds: CoordinateBounds | None = None) -> np.ndarray:
    """Class distribution for one event with a known key."""
    return model.predict_proba(encode_event(sample, ordering, bounds)[None])[0]


def predict_unknown_key(model: SharedCompareNet, sample: TrajectorySample,
                        bounds: CoordinateBounds | None = None) -> np.ndarray:
    """Elementwise mean of the distributions obtained with each present person as key."""
    present = sample.present_persons()
    if not present:
        raise MissingAgentError("sample has no present person to use as key")
    x = np.stack([encode_event(sample, proximity_order(sample, p), bounds) for p in present])
    return model.predict_proba(x).mean(axis=0)


def stacked_forward(model: StackedNet, sample: PossessionSample,
                    bounds: CoordinateBounds | None = None) -> np.ndarray:
    x = encode_possession(sample, bounds, model.cfg.includes_ball)
    return model.predict_proba(x[None])[0]


# =============================================================================
# Batch helpers
# =============================================================================

def encode_batch(model: Model, samples: list, bounds: CoordinateBounds | None = None) -> np.ndarray:
    """Training inputs; event samples must carry a key."""
    if isinstance(model, SharedCompareNet):
        inputs = []
        for s in samples:
            if s.key is None:
                raise MissingAgentError(f"event sample from game {s.game_id!r} has no key person")
            inputs.append(encode_event(s, proximity_order(s, s.key), bounds))
        return np.stack(inputs)
    return np.stack([encode_possession(s, bounds, model.cfg.includes_ball) for s in samples])


def predict_batch(model: Model, samples: list, bounds: CoordinateBounds | None = None,
                  key_known: bool = True, batch_size: int = PREDICT_BATCH) -> np.ndarray:
    """(N, num_classes) distributions, evaluated in chunks of `batch_size`."""
    if not samples:
        return np.zeros((0, model.cfg.num_classes))
    if isinstance(model, SharedCompareNet) and not key_known:
        return np.stack([predict_unknown_key(model, s, bounds) for s in samples])
    out = [model.predict_proba(encode_batch(model, samples[i:i + batch_size], bounds))
           for i in range(0, len(samples), batch_size)]
    return np.concatenate(out)

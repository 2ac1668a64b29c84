"""SGD with momentum: v <- momentum * v + grad; w <- w - lr * v."""

from dataclasses import dataclass

from .errors import ConfigError
from .layers import ParamStore

LR_SCHEDULES = ("constant",)


@dataclass(frozen=True)
class SGDConfig:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    lr_schedule: str = "constant"

    def __post_init__(self):
        if not self.lr > 0.0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigError(f"lr_schedule {self.lr_schedule!r} not supported; expected one of {LR_SCHEDULES}")

    def lr_at(self, epoch: int) -> float:
        # only "constant" exists; per-epoch schedules plug in here
        return self.lr


def sgd_step(params: ParamStore, lr: float, momentum: float = 0.9) -> ParamStore:
    if not lr > 0.0:
        raise ConfigError(f"learning rate must be > 0, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ConfigError(f"momentum must lie in [0, 1), got {momentum}")
    for p in params:
        p.velocity *= momentum
        p.velocity += p.grad
        p.value -= lr * p.velocity
    return params

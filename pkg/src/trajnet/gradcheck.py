"""Finite-difference verification of analytic gradients.

Any model exposing `params`, `loss(x, y, w)`, `loss_and_backward(x, y, w)`
returning (loss, dloss/dx), `activation_pattern()` and `tied` can be
checked. Entries whose perturbed forwards change a ReLU gate or a pool
winner, or land on a tied max, sit on a kink; they are counted as flagged
and left out of the pass/fail decision.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .layers import LayerSpec, ParamStore, build_stack, infer_shapes
from .losses import LossWeights, batch_loss_and_grad

DEFAULT_EPS = 1e-5
DEFAULT_TOL = 1e-4
DEFAULT_ATOL = 1e-8
INPUT = "input"


@dataclass
class ParamCheck:
    name: str
    n_checked: int = 0
    n_flagged: int = 0
    max_rel_error: float = 0.0
    max_abs_error: float = 0.0
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_checked": self.n_checked,
            "n_flagged": self.n_flagged,
            "max_rel_error": self.max_rel_error,
            "max_abs_error": self.max_abs_error,
            "passed": self.passed,
        }


@dataclass
class GradCheckReport:
    eps: float
    tol: float
    checks: list[ParamCheck] = field(default_factory=list)
    tied_at_base: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_rel_error(self) -> float:
        return max((c.max_rel_error for c in self.checks), default=0.0)

    @property
    def n_flagged(self) -> int:
        return sum(c.n_flagged for c in self.checks)

    def __getitem__(self, name: str) -> ParamCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = [f"{'parameter':<24} {'checked':>8} {'flagged':>8} {'max rel err':>12}  status"]
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            out.append(f"{c.name:<24} {c.n_checked:>8} {c.n_flagged:>8} {c.max_rel_error:>12.3e}  {status}")
        return out


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def _same_pattern(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def _check_array(model, name: str, target: np.ndarray, analytic: np.ndarray, loss_at, base_pattern,
                 eps: float, tol: float, atol: float, max_checks: int | None,
                 rng: np.random.Generator) -> ParamCheck:
    flat = target.reshape(-1)
    grad = analytic.reshape(-1)
    indices = np.arange(flat.size)
    if max_checks is not None and flat.size > max_checks:
        indices = np.sort(rng.choice(flat.size, size=max_checks, replace=False))

    check = ParamCheck(name)
    for i in indices:
        original = flat[i]
        flat[i] = original + eps
        loss_plus = loss_at()
        plus_ok = not model.tied and _same_pattern(model.activation_pattern(), base_pattern)
        flat[i] = original - eps
        loss_minus = loss_at()
        minus_ok = not model.tied and _same_pattern(model.activation_pattern(), base_pattern)
        flat[i] = original

        if not (plus_ok and minus_ok):
            check.n_flagged += 1
            continue
        numeric = (loss_plus - loss_minus) / (2.0 * eps)
        diff = abs(grad[i] - numeric)
        rel = relative_error(grad[i], numeric)
        check.n_checked += 1
        check.max_abs_error = max(check.max_abs_error, diff)
        if diff > atol:
            check.max_rel_error = max(check.max_rel_error, rel)
            if rel >= tol:
                check.passed = False
    return check


def gradient_check(model, x: np.ndarray, labels, w: LossWeights, eps: float = DEFAULT_EPS,
                   tol: float = DEFAULT_TOL, atol: float = DEFAULT_ATOL, max_checks: int | None = None,
                   wrt_input: bool = False, seed: int = 0) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    Relative error is |a - n| / max(|a|, |n|, 1e-8); an entry also passes when
    |a - n| <= atol. `max_checks` samples at most that many entries per
    parameter. With `wrt_input` the gradient w.r.t. x is checked as well,
    reported under the name "input".
    """
    if not eps > 0.0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    x = np.array(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)

    model.params.zero_grad()
    _, dx = model.loss_and_backward(x, labels, w)
    base_pattern = [p.copy() for p in model.activation_pattern()]
    report = GradCheckReport(eps=eps, tol=tol, tied_at_base=bool(model.tied))

    def loss_at() -> float:
        return model.loss(x, labels, w)

    for p in model.params:
        report.checks.append(_check_array(model, p.name, p.value, p.grad.copy(), loss_at, base_pattern,
                                          eps, tol, atol, max_checks, rng))
    if wrt_input:
        report.checks.append(_check_array(model, INPUT, x, np.array(dx), loss_at, base_pattern,
                                          eps, tol, atol, max_checks, rng))
    return report


# =============================================================================
# Harness for single layers
# =============================================================================

class LayerHarness:
    """A layer list followed by a fixed random readout into class logits.

    The readout is a constant, not a parameter, so only the stack's own
    weights (and optionally its input) are checked.
    """

    def __init__(self, specs: list[LayerSpec], in_shape: tuple, num_classes: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.params = ParamStore()
        self.stack = build_stack(specs, in_shape, self.params, "layer", rng)
        out_shape = infer_shapes(specs, in_shape)[-1] if specs else tuple(in_shape)
        self.out_shape = out_shape
        self.readout = rng.standard_normal((int(np.prod(out_shape)), num_classes))

    @property
    def tied(self) -> bool:
        return self.stack.tied

    def activation_pattern(self) -> list[np.ndarray]:
        return self.stack.activation_pattern()

    def logits(self, x: np.ndarray) -> np.ndarray:
        out = self.stack.forward(x)
        return out.reshape(out.shape[0], -1) @ self.readout

    def loss(self, x, labels, w) -> float:
        return batch_loss_and_grad(self.logits(x), labels, w)[0]

    def loss_and_backward(self, x, labels, w):
        out = self.stack.forward(x)
        loss, dlogits, _ = batch_loss_and_grad(out.reshape(out.shape[0], -1) @ self.readout, labels, w)
        dout = (dlogits @ self.readout.T).reshape(out.shape)
        return loss, self.stack.backward(dout)

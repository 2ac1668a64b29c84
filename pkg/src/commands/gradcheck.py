"""Finite-difference gradient check of a config's architecture."""

import numpy as np

from trajnet.gradcheck import DEFAULT_EPS, DEFAULT_TOL, gradient_check
from trajnet.models import build_model
from trajnet.settings import load_settings
from trajnet_utils import io

NAME = "gradcheck"
HELP = "compare analytic and finite-difference gradients on random inputs"


def add_arguments(p):
    p.add_argument("--config", required=True, help="INI training config naming the architecture")
    p.add_argument("--classes", type=int, default=None, help="class count when [classes] labels = auto")
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--max-checks", type=int, default=20, help="sampled entries per parameter")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)


def run(args):
    settings = load_settings(args.config)
    if settings.labels is not None:
        classes = settings.labels
    else:
        classes = tuple(f"class_{i:02d}" for i in range(args.classes or 2))
    model = build_model(settings.model_config(classes), seed=args.seed)

    rng = np.random.default_rng(args.seed)
    x = rng.uniform(-1.0, 1.0, size=(args.batch, *model.cfg.input_shape))
    labels = rng.integers(0, len(classes), size=args.batch)
    w = settings.weights(classes, labels)
    print(f"[gradcheck] {model.cfg.architecture} ({model.cfg.variant}), {model.params.count():,} weights, "
          f"batch {args.batch}")

    report = gradient_check(model, x, labels, w, eps=args.eps, tol=args.tol, max_checks=args.max_checks,
                            wrt_input=True, seed=args.seed)
    for line in report.lines():
        print(f"  {line}")
    io.write_json(args.run_dir / "gradcheck.json", {
        "eps": report.eps,
        "tol": report.tol,
        "passed": report.passed,
        "max_rel_error": report.max_rel_error,
        "checks": [c.to_dict() for c in report.checks],
    })
    return 0 if report.passed else 1

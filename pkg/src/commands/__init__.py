"""CLI subcommands.

Each module exposes NAME, HELP, add_arguments(parser) and run(args). A
module may also define seed(args), used to name the run directory before
the command starts.
"""

from . import evaluate, generate, gradcheck, predict, preprocess, sweep, train

COMMANDS = {m.NAME: m for m in (generate, preprocess, train, evaluate, predict, sweep, gradcheck)}


def command_seed(module, args) -> int:
    if hasattr(module, "seed"):
        return module.seed(args)
    return getattr(args, "seed", None) or 0

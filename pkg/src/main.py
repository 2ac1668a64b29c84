"""trajnet command line: generate, preprocess, train, evaluate, predict, sweep, gradcheck."""

import argparse
import sys
import traceback

from trajnet_utils import config, debug


def build_parser(commands: dict) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajnet", description="Trajectory networks for sports play analysis")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, module in commands.items():
        module.add_arguments(sub.add_parser(name, help=module.HELP, description=module.__doc__))
    return parser


def _fail(error: BaseException) -> int:
    message = " ".join(str(error).split())
    print(f"error: {type(error).__name__}: {message}", file=sys.stderr)
    return 1


def main(argv: list[str] | None = None) -> int:
    try:
        config.validate_environment()
    except ValueError as e:
        print(f"error: ConfigError: {e}", file=sys.stderr)
        return 1
    if config.is_single_threaded():
        config.pin_threads()

    # numpy loads from here on
    from commands import COMMANDS, command_seed
    from trajnet.errors import TrajnetError

    args = build_parser(COMMANDS).parse_args(argv)
    module = COMMANDS[args.command]
    try:
        seed = command_seed(module, args)
        args.run_dir = config.run_dir(seed)
        print(f"[{args.command}] run directory {args.run_dir}")
        debug.log_run_start(args.command, seed)
        result = module.run(args)
    except (TrajnetError, OSError, ValueError, RuntimeError) as e:
        # one stderr line; the traceback goes to runs.csv
        trace = "" if isinstance(e, (TrajnetError, OSError)) else traceback.format_exc()
        debug.log_run_end(args.command, status="failed", error=e, trace=trace)
        return _fail(e)

    debug.log_run_end(args.command)
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())

"""Synthetic event or team dataset."""

from pathlib import Path

from trajnet import synthetic
from trajnet.records import save_dataset
from trajnet_utils import io
from trajnet_utils.config import get_workers

NAME = "generate"
HELP = "write a synthetic event or team dataset"


def add_arguments(p):
    p.add_argument("--task", choices=("event", "team"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="dataset path (default: <run dir>/dataset.jsonl)")
    p.add_argument("--noise", type=float, default=0.0, help="gaussian noise std on coordinates")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: TRAJNET_WORKERS)")
    p.add_argument("--np", type=int, default=5, help="persons (event) or players (team) per sample")
    p.add_argument("--t", type=int, default=None, help="frames per sample (default 16 event, 200 team)")

    ev = p.add_argument_group("event task")
    ev.add_argument("--samples", type=int, default=4000)
    ev.add_argument("--mix", default=None, help='class mix, e.g. "pass=0.5,shot=0.1"')
    ev.add_argument("--absent-prob", type=float, default=0.0, help="chance a non-key track drops out")
    ev.add_argument("--games", type=int, default=synthetic.EVENT_GAMES)

    team = p.add_argument_group("team task")
    team.add_argument("--teams", type=int, default=6)
    team.add_argument("--per-team", type=int, default=200)
    team.add_argument("--per-game", type=int, default=synthetic.POSSESSIONS_PER_GAME)
    team.add_argument("--profile-seed", type=int, default=None, help="style profile seed (default: --seed)")


def run(args):
    workers = args.workers or get_workers()
    out = Path(args.out) if args.out else args.run_dir / "dataset.jsonl"
    print(f"[generate] {args.task} dataset, seed {args.seed}, {workers} worker(s)")

    if args.task == "event":
        mix = synthetic.parse_mix(args.mix) if args.mix else None
        dataset = synthetic.generate_events(
            args.seed, args.samples, class_mix=mix, noise_std=args.noise, absent_prob=args.absent_prob,
            np_persons=args.np, t=args.t or 16, n_games=args.games, workers=workers)
    else:
        profile_seed = args.seed if args.profile_seed is None else args.profile_seed
        profiles = synthetic.make_profiles(args.teams, seed=profile_seed)
        dataset = synthetic.generate_possessions(
            args.seed, profiles, args.per_team, per_game=args.per_game, np_players=args.np,
            t=args.t or 200, noise_std=args.noise, workers=workers)

    counts = {c: int((dataset.labels == i).sum()) for i, c in enumerate(dataset.header.classes)}
    print("  " + ", ".join(f"{c} {n}" for c, n in counts.items()))
    save_dataset(dataset, out)
    io.write_json(args.run_dir / "generate.json", {
        "command": NAME,
        "task": args.task,
        "seed": args.seed,
        "flags": {k: v for k, v in vars(args).items() if k not in ("run_dir", "command")},
        "dataset": str(out),
        "dataset_sha256": io.file_checksum(out),
        "n_samples": len(dataset),
        "class_counts": counts,
    })

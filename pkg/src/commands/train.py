"""Train a model from an INI config."""

from dataclasses import replace

from trajnet.records import load_dataset
from trajnet.settings import load_settings
from trajnet.training import overfit, train

NAME = "train"
HELP = "train on a dataset; writes checkpoint.parquet and manifest.json"


def add_arguments(p):
    p.add_argument("--config", required=True, help="INI training config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", help="checkpoint path (default: <run dir>/checkpoint.parquet)")
    p.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
    p.add_argument("--overfit", type=int, metavar="N", default=None,
                   help="fit the first N samples only, as a gradient-path sanity check")


def seed(args) -> int:
    settings = load_settings(args.config)
    if args.seed is not None:
        settings = replace(settings, seed=args.seed)
    args.settings = settings
    return settings.seed


def run(args):
    settings = args.settings if hasattr(args, "settings") else load_settings(args.config)
    dataset = load_dataset(args.dataset)
    if args.overfit is not None:
        manifest = overfit(settings, dataset, args.overfit, args.run_dir, dataset_path=args.dataset)
        final = manifest.history[-1]["train_loss"]
        print(f"[train] overfit finished: loss {final:.6f} after {len(manifest.history)} steps")
        return
    manifest = train(settings, dataset, args.run_dir, dataset_path=args.dataset, checkpoint_path=args.checkpoint)
    print(f"[train] best epoch {manifest.best_epoch}, checkpoint {manifest.checkpoint}")

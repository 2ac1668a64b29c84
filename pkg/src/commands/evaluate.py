"""Score a checkpoint on a dataset and write the report files."""

from pathlib import Path

from trajnet.errors import SplitError
from trajnet.models import predict_batch
from trajnet.records import load_dataset
from trajnet.report import HIT_KS, build_event_report, build_team_report, report_lines, write_report
from trajnet.training import load_trained
from trajnet_utils import io

NAME = "evaluate"
HELP = "per-class AP / mAP (event) or accuracy, hit@k, game votes (team)"

REGIMES = ("key_known", "key_unknown")


def add_arguments(p):
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--regime", choices=REGIMES + ("both",), default="both", help="event task key regime")
    p.add_argument("--k", type=int, nargs="+", default=list(HIT_KS), help="hit@k values (team task)")
    p.add_argument("--split-manifest", help="score only the test games of this training manifest")
    p.add_argument("--out", help="report directory (default: <run dir>)")


def _test_subset(dataset, manifest_path: str):
    manifest = io.read_json(manifest_path)
    if manifest is None or "games" not in manifest:
        raise SplitError(f"{manifest_path}: not a training manifest with a game split")
    test_games = set(manifest["games"].get("test", []))
    indices = [i for i, g in enumerate(dataset.game_ids()) if g in test_games]
    if not indices:
        raise SplitError(f"{manifest_path}: none of its test games occur in the dataset")
    return dataset.subset(indices)


def run(args):
    dataset = load_dataset(args.dataset)
    if args.split_manifest:
        dataset = _test_subset(dataset, args.split_manifest)
    model, classes = load_trained(args.checkpoint, dataset.header)
    out = Path(args.out) if args.out else args.run_dir
    bounds = dataset.header.bounds
    print(f"[eval] {args.checkpoint} on {len(dataset):,} {dataset.header.task} samples")

    reports = []
    if dataset.header.task == "event":
        regimes = REGIMES if args.regime == "both" else (args.regime,)
        for regime in regimes:
            samples = dataset.samples
            if regime == "key_known":
                samples = [s for s in samples if s.key is not None]
                if not samples:
                    print("  key_known: no sample carries a key person, skipped")
                    continue
            probs = predict_batch(model, samples, bounds, key_known=regime == "key_known")
            labels = [s.label for s in samples]
            reports.append(build_event_report(probs, labels, classes, regime=regime, samples=samples))
    else:
        probs = predict_batch(model, dataset.samples, bounds)
        reports.append(build_team_report(probs, dataset.labels, dataset.game_ids(), classes, ks=tuple(args.k)))

    for report in reports:
        for line in report_lines(report):
            print(f"  {line}")
        write_report(report, out)
    return reports

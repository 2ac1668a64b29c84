"""Per-sample class distributions as JSONL."""

from pathlib import Path

from trajnet.models import predict_batch
from trajnet.records import load_dataset
from trajnet.training import load_trained
from trajnet_utils import io

NAME = "predict"
HELP = "write one JSON line of class probabilities per sample"


def add_arguments(p):
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--key-unknown", action="store_true",
                   help="average over every present person as key (event task)")
    p.add_argument("--out", help="JSONL path (default: <run dir>/predictions.jsonl)")


def run(args):
    dataset = load_dataset(args.dataset)
    model, classes = load_trained(args.checkpoint, dataset.header)
    out = Path(args.out) if args.out else args.run_dir / "predictions.jsonl"
    probs = predict_batch(model, dataset.samples, dataset.header.bounds, key_known=not args.key_unknown)

    records = []
    for i, (sample, row) in enumerate(zip(dataset.samples, probs)):
        records.append({
            "index": i,
            "game_id": sample.game_id,
            "label": classes[sample.label],
            "predicted": classes[int(row.argmax())],
            "probs": {c: float(p) for c, p in zip(classes, row)},
        })
    io.write_jsonl(out, records)
    print(f"[predict] {len(records):,} predictions -> {out}")

"""Raw track tables -> dataset file."""

from pathlib import Path

from trajnet.errors import DatasetFormatError
from trajnet.losses import EVENT_CLASSES
from trajnet.preprocess import MIN_SEPARATION, SAMPLE_STEP, extract_possessions, load_track_tables, window_events
from trajnet.records import COURT_BOUNDS, RINK_BOUNDS, Dataset, DatasetHeader, save_dataset

NAME = "preprocess"
HELP = "cut raw tracks into event windows or possessions"

BOUNDS = {"rink": RINK_BOUNDS, "court": COURT_BOUNDS}


def add_arguments(p):
    p.add_argument("--tracks", required=True, help="raw track-table JSON")
    p.add_argument("--task", choices=("event", "team"), required=True)
    p.add_argument("--out", help="dataset path (default: <run dir>/dataset.jsonl)")
    p.add_argument("--np", type=int, default=5)
    p.add_argument("--t", type=int, default=None, help="frames per sample (default 16 event, 200 team)")
    p.add_argument("--bounds", choices=tuple(BOUNDS), default=None, help="default rink (event), court (team)")
    p.add_argument("--min-separation", type=int, default=MIN_SEPARATION)
    p.add_argument("--step", type=int, default=SAMPLE_STEP, help="native-frame step for possessions")


def run(args):
    tables = load_track_tables(args.tracks)
    out = Path(args.out) if args.out else args.run_dir / "dataset.jsonl"
    print(f"[preprocess] {len(tables)} game(s) from {args.tracks}")

    if args.task == "event":
        t = args.t or 16
        classes = EVENT_CLASSES
        samples = [s for table in tables
                   for s in window_events(table, classes=classes, np_persons=args.np, t=t,
                                          min_separation=args.min_separation)]
        bounds = BOUNDS[args.bounds or "rink"]
    else:
        t = args.t or 200
        classes = tuple(sorted({m.team for table in tables for m in table.possessions}))
        if not classes:
            raise DatasetFormatError(f"{args.tracks}: no possessions to label")
        samples = [s for table in tables
                   for s in extract_possessions(table, classes=classes, np_players=args.np, t=t, step=args.step)]
        bounds = BOUNDS[args.bounds or "court"]

    header = DatasetHeader(args.task, args.np, t, bounds, classes)
    save_dataset(Dataset(header, samples), out)

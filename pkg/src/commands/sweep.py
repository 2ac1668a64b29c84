"""Train every variant of a stacked-architecture sweep and tabulate test metrics."""

import json
from pathlib import Path

from trajnet.records import load_dataset
from trajnet.report import sweep_lines, sweep_table
from trajnet.settings import load_sweep_spec
from trajnet.training import train
from trajnet_utils import io
from trajnet_utils.orchestrator import Sweep

NAME = "sweep"
HELP = "train each variant of a layer-count, filter-size or base-filter sweep"


def add_arguments(p):
    p.add_argument("--spec", required=True, help="sweep INI ([sweep] base_config, sweep, variants)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="sweep directory (default: <run dir>); rerunning resumes finished variants")
    p.add_argument("--on-failure", choices=("continue", "crash"), default=None,
                   help="default: SWEEP_ON_FAILURE")


def seed(args) -> int:
    args.spec_obj = load_sweep_spec(args.spec)
    return args.spec_obj.base.seed


def _slug(variant: str) -> str:
    return variant.replace(" ", "-").replace("+", "_")


def _variant_task(settings, dataset, dataset_path, out: Path, variant: str):
    def task() -> dict:
        manifest = train(settings, dataset, out / _slug(variant), dataset_path=dataset_path)
        test = manifest.test
        return {
            "variant": variant,
            "acc": test.get("accuracy"),
            "hit@2": test.get("hit@2"),
            "hit@3": test.get("hit@3"),
            "game_acc": test.get("game_accuracy"),
            "params": manifest.params,
        }
    return task


def run(args):
    spec = args.spec_obj if hasattr(args, "spec_obj") else load_sweep_spec(args.spec)
    dataset = load_dataset(args.dataset)
    out = Path(args.out) if args.out else args.run_dir
    configs = spec.configs()
    print(f"[sweep] {spec.sweep}: {len(configs)} variants, seed {spec.base.seed}")

    fingerprint = json.dumps({"base": spec.base.to_dict(), "dataset": io.file_checksum(args.dataset)},
                             sort_keys=True)
    tasks = {variant: _variant_task(settings, dataset, args.dataset, out, variant)
             for variant, settings in configs.items()}
    sweep = Sweep(tasks, out / "sweep_state.json", fingerprint=fingerprint).run(args.on_failure)

    rows = []
    for variant, st in sweep.state.items():
        if st["status"] == "done":
            rows.append(st["result"])
        else:
            rows.append({"variant": variant, "error": st["error"]})
    for line in sweep_lines(rows):
        print(f"  {line}")
    io.write_text(out / "sweep.txt", "\n".join(sweep_lines(rows)) + "\n")
    io.write_csv(sweep_table([r for r in rows if not r.get("error")]), out / "sweep.csv")
    return rows

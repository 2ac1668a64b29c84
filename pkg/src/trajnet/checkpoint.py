"""Parameter checkpoints as parquet files.

One row per parameter: name, shape, flattened float64 values. The schema
metadata carries the format version, the model config as JSON, the seed
and the class names.
Parquet stores float64 losslessly, so write then read is bit-exact.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pyarrow as pa

from trajnet_utils import io

from .errors import CheckpointFormatError, NonFiniteError
from .layers import ParamStore

CHECKPOINT_FORMAT_VERSION = 1

SCHEMA = pa.schema([
    pa.field("name", pa.string(), nullable=False),
    pa.field("shape", pa.list_(pa.int64()), nullable=False),
    pa.field("values", pa.list_(pa.float64()), nullable=False),
])


@dataclass
class Checkpoint:
    config: dict
    seed: int
    state: dict[str, np.ndarray]
    classes: tuple[str, ...] = ()
    format_version: int = CHECKPOINT_FORMAT_VERSION


def checkpoint_table(params: ParamStore, config: dict, seed: int, classes: tuple[str, ...] = ()) -> pa.Table:
    if not params.all_finite():
        bad = [p.name for p in params if not np.all(np.isfinite(p.value))]
        raise NonFiniteError(f"refusing to write non-finite weights: {', '.join(bad)}")
    state = params.state()
    table = pa.table({
        "name": list(state),
        "shape": [list(v.shape) for v in state.values()],
        "values": [v.reshape(-1) for v in state.values()],
    }, schema=SCHEMA)
    return table.replace_schema_metadata({
        "format_version": str(CHECKPOINT_FORMAT_VERSION),
        "config": json.dumps(config, sort_keys=True),
        "seed": str(int(seed)),
        "classes": json.dumps(list(classes)),
    })


def save_checkpoint(path: str | Path, params: ParamStore, config: dict, seed: int,
                    classes: tuple[str, ...] = ()) -> str:
    uri = io.write_parquet(checkpoint_table(params, config, seed, classes), path)
    print(f"  -> Saved {Path(str(path)).name} ({params.count():,} weights)")
    return uri


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        table = io.read_parquet(path)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise CheckpointFormatError(f"{path}: not a parquet checkpoint ({e})") from None

    meta = {k.decode(): v.decode() for k, v in (table.schema.metadata or {}).items()}
    try:
        version = int(meta["format_version"])
        config = json.loads(meta["config"])
        seed = int(meta["seed"])
        classes = tuple(json.loads(meta.get("classes", "[]")))
    except (KeyError, ValueError) as e:
        raise CheckpointFormatError(f"{path}: missing or bad checkpoint metadata ({e})") from None
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: format_version {version} unsupported; this build reads {CHECKPOINT_FORMAT_VERSION}")
    if not {"name", "shape", "values"} <= set(table.column_names):
        raise CheckpointFormatError(f"{path}: expected columns name, shape, values; got {table.column_names}")

    state = {}
    for row in table.to_pylist():
        values = np.asarray(row["values"], dtype=np.float64)
        shape = tuple(row["shape"])
        if values.size != int(np.prod(shape)):
            raise CheckpointFormatError(f"{path}: parameter {row['name']!r} has {values.size} values for shape {shape}")
        state[row["name"]] = values.reshape(shape)
    return Checkpoint(config=config, seed=seed, state=state, classes=classes, format_version=version)

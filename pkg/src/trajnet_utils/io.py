"""Byte, JSON and table I/O for datasets, checkpoints and reports.

All reads and writes go through fsspec via `get_fs(uri)`, so a path may be a
local file or any fsspec URI. Local writes are atomic (temp file + rename):
a command that fails midway never leaves a truncated artifact behind.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path

import fsspec
import pyarrow as pa
import pyarrow.csv as pacsv
import pyarrow.parquet as pq


# =============================================================================
# URI dispatch via fsspec
# =============================================================================

def _is_local(uri: str) -> bool:
    return "://" not in uri or uri.startswith("file://")


def get_fs(uri: str = ""):
    """fsspec filesystem for a URI; local paths get auto_mkdir."""
    if _is_local(uri):
        return fsspec.filesystem("file", auto_mkdir=True)
    protocol = uri.split("://", 1)[0]
    return fsspec.filesystem(protocol)


def write_bytes(uri: str | Path, data: bytes) -> str:
    """Write bytes to a URI. Local paths are replaced atomically."""
    uri = str(uri)
    if not _is_local(uri):
        fs = get_fs(uri)
        with fs.open(uri, "wb") as f:
            f.write(data)
        return uri
    path = Path(uri.removeprefix("file://"))
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return uri


def read_bytes(uri: str | Path) -> bytes:
    """Read bytes from a URI. Raises FileNotFoundError if absent."""
    uri = str(uri)
    fs = get_fs(uri)
    with fs.open(uri, "rb") as f:
        return f.read()


def exists(uri: str | Path) -> bool:
    uri = str(uri)
    return get_fs(uri).exists(uri)


# =============================================================================
# Text and JSON
# =============================================================================

def write_text(uri: str | Path, text: str) -> str:
    return write_bytes(uri, text.encode("utf-8"))


def read_text(uri: str | Path) -> str:
    return read_bytes(uri).decode("utf-8")


def write_json(uri: str | Path, data: dict) -> str:
    return write_text(uri, json.dumps(data, indent=2, sort_keys=False) + "\n")


def read_json(uri: str | Path) -> dict | None:
    """Load a JSON object, or None if the file is missing or unparsable."""
    try:
        return json.loads(read_text(uri))
    except (FileNotFoundError, json.JSONDecodeError):
        return None


def write_jsonl(uri: str | Path, records: list[dict]) -> str:
    lines = [json.dumps(r, allow_nan=False) for r in records]
    return write_text(uri, "".join(line + "\n" for line in lines))


# =============================================================================
# Hashing
# =============================================================================

def file_checksum(uri: str | Path) -> str:
    """sha256 of a file's bytes."""
    return hashlib.sha256(read_bytes(uri)).hexdigest()


# =============================================================================
# Tables
# =============================================================================

def write_csv(table: pa.Table, uri: str | Path) -> str:
    sink = pa.BufferOutputStream()
    pacsv.write_csv(table, sink)
    write_bytes(uri, sink.getvalue().to_pybytes())
    print(f"  -> Saved {Path(str(uri)).name} ({table.num_rows:,} rows)")
    return str(uri)


def write_parquet(table: pa.Table, uri: str | Path) -> str:
    sink = pa.BufferOutputStream()
    pq.write_table(table, sink)
    return write_bytes(uri, sink.getvalue().to_pybytes())


def read_parquet(uri: str | Path) -> pa.Table:
    return pq.read_table(pa.BufferReader(read_bytes(uri)))

"""On-disk formats: array containers, CSV tables, system and manifest JSON.

Every writer goes through :func:`atomic_write`, which writes a temporary file
in the target directory and renames it into place, so readers never observe
a partial file. Field orders are documented in ``docs/FORMATS.md``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .linops import MarkovSequence
from .system import LinearSystem, RolloutBatch

MAGIC = b"LOWSYSID-CONTAINER 1\n"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """File does not follow the expected layout."""


def atomic_write(path, data: bytes | str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- containers

def encode_container(kind: str, meta: dict, arrays: dict) -> bytes:
    """Magic line, one JSON header line, then each array as raw little-endian float64 in header order."""
    header = {"kind": kind, "meta": meta,
              "arrays": [{"name": k, "shape": list(np.shape(v))} for k, v in arrays.items()]}
    parts = [MAGIC, json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"), b"\n"]
    for v in arrays.values():
        parts.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_container(raw: bytes, kind: Optional[str] = None) -> tuple[dict, dict]:
    if not raw.startswith(MAGIC):
        raise FormatError("not a lowsysid container (bad magic line)")
    end = raw.find(b"\n", len(MAGIC))
    if end < 0:
        raise FormatError("missing header line")
    try:
        header = json.loads(raw[len(MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from exc
    if kind is not None and header.get("kind") != kind:
        raise FormatError(f"expected a {kind!r} container, found {header.get('kind')!r}")
    arrays = {}
    offset = end + 1
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if offset + nbytes > len(raw):
            raise FormatError(f"truncated data for array {spec['name']!r}")
        arrays[spec["name"]] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise FormatError(f"{len(raw) - offset} trailing bytes after the declared arrays")
    return header["meta"], arrays


def encode_batch(batch: RolloutBatch) -> bytes:
    meta = {"l": batch.l, "seed": batch.seed, "noise_var": batch.noise_var,
            "n": batch.n, "t": batch.t, "n_u": batch.n_u, "n_y": batch.n_y}
    return encode_container("rollouts", meta, {"inputs": batch.inputs, "outputs": batch.outputs})


def decode_batch(raw: bytes) -> RolloutBatch:
    meta, arrays = decode_container(raw, "rollouts")
    batch = RolloutBatch(arrays["inputs"], arrays["outputs"], int(meta["l"]), int(meta["seed"]),
                         float(meta["noise_var"]))
    if (batch.n, batch.t, batch.n_u, batch.n_y) != (meta["n"], meta["t"], meta["n_u"], meta["n_y"]):
        raise FormatError("header dimensions disagree with the stored arrays")
    return batch


def save_batch(batch: RolloutBatch, path):
    atomic_write(path, encode_batch(batch))


def load_batch(path) -> RolloutBatch:
    return decode_batch(Path(path).read_bytes())


def save_checkpoints(checkpoints: Sequence, path):
    """``[(iter, MarkovSequence), ...]`` as one container with ``iters`` and stacked ``blocks``."""
    if not checkpoints:
        raise ValueError("no checkpoints to save")
    iters = np.array([it for it, _ in checkpoints], dtype=float)
    blocks = np.stack([k.blocks for _, k in checkpoints])
    atomic_write(path, encode_container("checkpoints", {"count": len(checkpoints)},
                                        {"iters": iters, "blocks": blocks}))


def load_checkpoints(path) -> list:
    _, arrays = decode_container(Path(path).read_bytes(), "checkpoints")
    return [(int(it), MarkovSequence(b)) for it, b in zip(arrays["iters"], arrays["blocks"])]


# ---------------------------------------------------------------- CSV

def fmt(x) -> str:
    """Shortest round-trip text for numbers; empty for missing (NaN / None)."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]):
    atomic_write(path, csv_text(columns, rows))


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV (header is mandatory)") from None
        return header, [row for row in reader]


def batch_csv_columns(batch: RolloutBatch) -> list:
    return (["rollout", "t"] + [f"u{k}" for k in range(batch.n_u)] + [f"y{k}" for k in range(batch.n_y)])


def export_batch_csv(batch: RolloutBatch, path):
    """One row per ``(rollout, t)``; ``t`` counts from 1."""
    def rows():
        for i in range(batch.n):
            for t in range(batch.t):
                yield [i, t + 1, *batch.inputs[i, t], *batch.outputs[i, t]]
    write_csv(path, batch_csv_columns(batch), rows())


# ---------------------------------------------------------------- JSON

def matrix_to_list(m) -> list:
    return [[float(x) for x in row] for row in np.asarray(m)]


def system_to_dict(sys: LinearSystem) -> dict:
    return {"format_version": FORMAT_VERSION, "n_x": sys.n_x, "n_u": sys.n_u, "n_y": sys.n_y,
            "a": matrix_to_list(sys.a), "b": matrix_to_list(sys.b), "c": matrix_to_list(sys.c), "d": matrix_to_list(sys.d)}


def system_from_dict(d: dict) -> LinearSystem:
    try:
        sys = LinearSystem(np.array(d["a"], dtype=float).reshape(d["n_x"], d["n_x"]),
                           np.array(d["b"], dtype=float).reshape(d["n_x"], d["n_u"]),
                           np.array(d["c"], dtype=float).reshape(d["n_y"], d["n_x"]),
                           np.array(d["d"], dtype=float).reshape(d["n_y"], d["n_u"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"bad system record: {exc}") from exc
    return sys


def dumps(obj: dict) -> str:
    """JSON object with one top-level key per line and compact values, keys sorted."""
    items = [f" {json.dumps(k)}: {json.dumps(obj[k], sort_keys=True)}" for k in sorted(obj)]
    return "{\n" + ",\n".join(items) + "\n}\n"


def save_system(sys: LinearSystem, path):
    atomic_write(path, dumps(system_to_dict(sys)))


def load_system(path) -> LinearSystem:
    return system_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_json(obj, path):
    atomic_write(path, dumps(obj))


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc


def markov_to_list(k: MarkovSequence) -> list:
    return [matrix_to_list(b) for b in k.blocks]


def markov_from_list(blocks) -> MarkovSequence:
    return MarkovSequence(np.array(blocks, dtype=float))

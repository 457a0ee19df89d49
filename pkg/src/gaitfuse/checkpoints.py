"""Checkpoint format: a JSON manifest next to a little-endian float64 blob.

``<base>.json`` holds architecture/hyperparameters/seed plus a tensor
directory with byte offsets into ``<base>.bin``.  Tensors round-trip
bit-exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import CheckpointError

FORMAT_VERSION = 1


def _base(path) -> str:
    path = str(path)
    for ext in (".json", ".bin"):
        if path.endswith(ext):
            return path[: -len(ext)]
    return path


def save_checkpoint(path, manifest: dict, tensors: dict) -> None:
    base = _base(path)
    directory = []
    offset = 0
    blob = bytearray()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype=np.float64)
        raw = arr.astype("<f8").tobytes()
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob.extend(raw)
        offset += len(raw)
    doc = dict(manifest)
    doc["format_version"] = FORMAT_VERSION
    doc["tensors"] = directory
    with open(base + ".bin", "wb") as fh:
        fh.write(bytes(blob))
    tmp = base + ".json.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    os.replace(tmp, base + ".json")


def load_checkpoint(path) -> tuple[dict, dict]:
    base = _base(path)
    jpath, bpath = base + ".json", base + ".bin"
    if not os.path.exists(jpath) or not os.path.exists(bpath):
        raise CheckpointError(f"checkpoint {base!r} missing .json or .bin")
    try:
        with open(jpath, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"malformed checkpoint manifest {jpath!r}: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version in {jpath!r}")
    with open(bpath, "rb") as fh:
        blob = fh.read()
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=start)
        tensors[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return manifest, tensors

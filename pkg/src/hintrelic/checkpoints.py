"""Parameter checkpoints: a JSON header followed by one flat binary block.

Layout: 8 bytes little-endian header length, the UTF-8 JSON header, then
every parameter's float64 bytes in header order.  The header records
name, shape and byte offset per parameter, so a file is self-describing
and loads without the model that wrote it.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .autodiff import Tensor

_MAGIC = "hintrelic-checkpoint-v1"


def save_checkpoint(path: str | Path, params: "dict[str, Tensor]") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    blobs = []
    for name in params:
        # tobytes() always emits C-order bytes; ascontiguousarray would
        # silently promote 0-d parameters to shape (1,)
        data = np.asarray(params[name].data, dtype=np.float64)
        blob = data.tobytes()
        entries.append(
            {"name": name, "shape": list(data.shape), "offset": offset, "bytes": len(blob)}
        )
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({"format": _MAGIC, "entries": entries}).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> "dict[str, np.ndarray]":
    path = Path(path)
    with path.open("rb") as fh:
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("format") != _MAGIC:
            raise ValueError(f"{path} is not a parameter checkpoint")
        body = fh.read()
    out: dict[str, np.ndarray] = {}
    for entry in header["entries"]:
        start, size = entry["offset"], entry["bytes"]
        arr = np.frombuffer(body[start : start + size], dtype=np.float64)
        out[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return out


def restore_into(params: "dict[str, Tensor]", stored: "dict[str, np.ndarray]") -> None:
    """Copy stored arrays into an existing parameter dict, by name."""
    missing = set(params) ^ set(stored)
    if missing:
        raise ValueError(f"checkpoint/parameter name mismatch: {sorted(missing)}")
    for name, tensor in params.items():
        arr = stored[name]
        if arr.shape != tensor.data.shape:
            raise ValueError(
                f"{name}: checkpoint shape {arr.shape} != parameter shape {tensor.data.shape}"
            )
        tensor.data = arr.astype(np.float64, copy=True)

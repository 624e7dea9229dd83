"""Binary archive codec for model checkpoints and embedding exports.

Layout: 5-byte magic ``SAVS1``, a little-endian uint32 manifest length,
a UTF-8 JSON manifest ``{"config": {...}, "tensors": [{"name", "shape",
"dtype"}, ...]}``, then the raw tensor payloads concatenated in manifest
order as little-endian float32, C-contiguous.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"SAVS1"
_DTYPE = "<f4"


def save_archive(path, tensors: dict, config: dict) -> None:
    """Write named float32 arrays plus a JSON-serializable config snapshot."""
    entries = []
    payloads = []
    for name, value in tensors.items():
        arr = np.ascontiguousarray(np.asarray(value), dtype=_DTYPE)
        entries.append({"name": str(name), "shape": list(arr.shape), "dtype": "f4"})
        payloads.append(arr.tobytes())
    manifest = json.dumps(
        {"config": config, "tensors": entries}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(manifest)))
        fh.write(manifest)
        for payload in payloads:
            fh.write(payload)


def load_archive(path):
    """Read an archive back as ``(tensors: dict[str, np.ndarray], config: dict)``."""
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a {MAGIC.decode()} archive")
    offset = len(MAGIC)
    (manifest_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    manifest = json.loads(raw[offset : offset + manifest_len].decode("utf-8"))
    offset += manifest_len
    tensors = {}
    for entry in manifest["tensors"]:
        if entry["dtype"] != "f4":
            raise ValueError(f"{path}: unsupported element type {entry['dtype']!r}")
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype=_DTYPE, count=count, offset=offset)
        offset += arr.nbytes
        tensors[entry["name"]] = arr.reshape(shape).copy()
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes after payloads")
    return tensors, manifest.get("config", {})


def save_checkpoint(path, model, config: dict) -> None:
    """Serialize a model's parameter groups with its config snapshot."""
    tensors = {name: tensor.detach().cpu().numpy() for name, tensor in model.state_dict().items()}
    save_archive(path, tensors, config)


def load_checkpoint(path):
    """Rebuild the model recorded in an archive; returns ``(model, config)``."""
    from .model import SavsModel

    tensors, config = load_archive(path)
    model = SavsModel(
        num_classes=int(config["num_classes"]),
        channels=int(config["channels"]),
        reduction=int(config["reduction"]),
        grid=int(config["grid"]),
        input_size=int(config["input_size"]),
        ablation=config["ablation"],
    )
    state = {name: torch.from_numpy(arr) for name, arr in tensors.items()}
    model.load_state_dict(state)
    model.eval()
    return model, config

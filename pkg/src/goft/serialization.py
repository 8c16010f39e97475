"""Checkpoint and weight-file I/O.

Checkpoints are JSON with parameter and optimizer arrays stored as
base64-encoded little-endian float64, so save/load round-trips are
bitwise exact while the file stays diffable.  Weight files use a minimal
binary container: magic "GOFTW\\0", u32 version, u32 d, u32 n, then
row-major float64 (little-endian).
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .trainer import AdamState, TrainConfig, make_adapter, get_flat_params, set_flat_params
from .adapter import FrozenWeight

FORMAT_VERSION = 1
WEIGHT_MAGIC = b"GOFTW\x00"
WEIGHT_VERSION = 1


def encode_f64(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "encoding": "base64-f64-le",
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def decode_f64(obj: dict) -> np.ndarray:
    if obj.get("encoding") != "base64-f64-le":
        raise ConfigError(f"unknown array encoding {obj.get('encoding')!r}")
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(obj["shape"])


def save_checkpoint(path, adapter, config: TrainConfig, next_step: int,
                    opt: AdamState | None = None, task_spec: dict | None = None):
    params = get_flat_params(adapter)
    doc = {
        "format_version": FORMAT_VERSION,
        "method": config.method,
        "plan": {"d": adapter.weight.d, "pairing": "binary-tree"},
        "params": encode_f64(params),
        "optimizer": None if opt is None else {
            "step": opt.t,
            "m": encode_f64(opt.m),
            "v": encode_f64(opt.v),
        },
        "config": config.__dict__,
        "task": task_spec,
        "seed": config.seed,
        "next_step": next_step,
        "summary": {
            "num_params": int(params.shape[0]),
            "param_l2": float(np.linalg.norm(params)),
            "param_max_abs": float(np.max(np.abs(params))) if params.size else 0.0,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_checkpoint(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    doc["params_array"] = decode_f64(doc["params"])
    if doc.get("optimizer"):
        doc["optimizer_state"] = AdamState(
            m=decode_f64(doc["optimizer"]["m"]),
            v=decode_f64(doc["optimizer"]["v"]),
            t=int(doc["optimizer"]["step"]),
        )
    else:
        doc["optimizer_state"] = None
    return doc


def adapter_from_checkpoint(doc: dict, weight: FrozenWeight):
    """Rebuild the adapter for a loaded checkpoint on the given weights."""
    if doc["plan"]["d"] != weight.d:
        raise ConfigError(
            f"checkpoint dimension {doc['plan']['d']} does not match weights d={weight.d}"
        )
    adapter = make_adapter(doc["method"], weight)
    set_flat_params(adapter, doc["params_array"])
    return adapter


def save_weights(path, weight: FrozenWeight):
    W = np.ascontiguousarray(weight.W, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(np.array([WEIGHT_VERSION, W.shape[0], W.shape[1]], dtype="<u4").tobytes())
        fh.write(W.tobytes())


def load_weights(path) -> FrozenWeight:
    raw = Path(path).read_bytes()
    if raw[:6] != WEIGHT_MAGIC:
        raise ConfigError(f"{path}: not a weight file (bad magic)")
    header = np.frombuffer(raw[6:18], dtype="<u4")
    version, d, n = (int(v) for v in header)
    if version != WEIGHT_VERSION:
        raise ConfigError(f"{path}: unsupported weight file version {version}")
    body = np.frombuffer(raw[18:], dtype="<f8")
    if body.shape[0] != d * n:
        raise ConfigError(f"{path}: truncated weight file")
    return FrozenWeight(W=body.reshape(d, n).astype(np.float64))

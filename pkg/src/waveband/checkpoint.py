"""Versioned binary checkpoint format.

Layout (all integers little-endian):

    bytes 0..7    magic b"WVBNDCKP"
    bytes 8..11   uint32 format version (currently 1)
    bytes 12..19  uint64 length of the JSON header in bytes
    ...           JSON header (UTF-8)
    ...           concatenated little-endian float64 parameter payloads

The JSON header holds the full resolved run configuration plus a
``parameters`` list of ``{name, shape, offset, count}`` records; offsets
are element counts into the payload region.
"""

import json

import numpy as np

from .errors import CheckpointMismatch

MAGIC = b"WVBNDCKP"
VERSION = 1


def save(path, parameters, config: dict):
    """Write named parameter arrays plus the run config."""
    manifest = []
    offset = 0
    payloads = []
    for p in parameters:
        arr = np.ascontiguousarray(p.value, dtype="<f8")
        manifest.append({"name": p.name, "shape": list(arr.shape),
                         "offset": offset, "count": int(arr.size)})
        payloads.append(arr.tobytes())
        offset += arr.size
    header = json.dumps({"config": config, "parameters": manifest},
                        sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.uint32(VERSION).tobytes())
        f.write(np.uint64(len(header)).tobytes())
        f.write(header)
        for blob in payloads:
            f.write(blob)


def load(path):
    """Read (name -> array dict, config dict) from a checkpoint file."""
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise CheckpointMismatch(f"{path}: not a checkpoint file")
        version = int(np.frombuffer(f.read(4), dtype="<u4")[0])
        if version != VERSION:
            raise CheckpointMismatch(
                f"{path}: unsupported checkpoint version {version}")
        hlen = int(np.frombuffer(f.read(8), dtype="<u8")[0])
        header = json.loads(f.read(hlen).decode("utf-8"))
        payload = f.read()
    values = np.frombuffer(payload, dtype="<f8")
    params = {}
    for rec in header["parameters"]:
        chunk = values[rec["offset"]:rec["offset"] + rec["count"]]
        if chunk.size != rec["count"]:
            raise CheckpointMismatch(
                f"{path}: truncated payload for {rec['name']}")
        params[rec["name"]] = chunk.reshape(rec["shape"]).copy()
    return params, header["config"]


def restore_into(model, params: dict):
    """Copy loaded arrays into a model's parameters by identity name."""
    own = {p.name: p for p in model.parameters()}
    if set(own) != set(params):
        missing = set(own) ^ set(params)
        raise CheckpointMismatch(
            f"parameter names do not match the model: {sorted(missing)[:4]}")
    for name, arr in params.items():
        if own[name].value.shape != arr.shape:
            raise CheckpointMismatch(
                f"shape mismatch for {name}: model {own[name].value.shape} "
                f"vs checkpoint {arr.shape}")
        own[name].value[...] = arr

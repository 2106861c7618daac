"""Versioned binary model checkpoints.

Layout: 4-byte magic ``MGNC``, little-endian u32 format version, u32 header
length, a UTF-8 JSON header (model spec, provenance, array manifest in
order), then each parameter array as a u64 element count followed by that
many little-endian float64 values. Loading is bit-exact and rejects bad
magic, unsupported versions and truncated payloads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .models import ModelSpec

MAGIC = b"MGNC"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    spec: ModelSpec
    params: dict[str, np.ndarray]
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_tensors(cls, spec: ModelSpec, params: dict[str, Tensor], provenance: dict) -> "Checkpoint":
        return cls(
            spec=spec,
            params={name: p.value.copy() for name, p in params.items()},
            provenance=dict(provenance),
        )

    def tensors(self, requires_grad: bool = True) -> dict[str, Tensor]:
        return {
            name: Tensor(arr.copy(), requires_grad=requires_grad)
            for name, arr in self.params.items()
        }


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    names = sorted(ckpt.params)
    header = {
        "spec": ckpt.spec.to_dict(),
        "provenance": ckpt.provenance,
        "arrays": [
            {"name": name, "rows": int(ckpt.params[name].shape[0]),
             "cols": int(ckpt.params[name].shape[1])}
            for name in names
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            arr = np.ascontiguousarray(ckpt.params[name], dtype="<f8")
            fh.write(struct.pack("<Q", arr.size))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint: {err}") from None
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise CheckpointError(f"not a checkpoint file (bad magic): {path}")
    version = struct.unpack_from("<I", blob, 4)[0]
    if version > FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (supported up to {FORMAT_VERSION})"
        )
    header_len = struct.unpack_from("<I", blob, 8)[0]
    if len(blob) < 12 + header_len:
        raise CheckpointError(f"truncated checkpoint header: {path}")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as err:
        raise CheckpointError(f"corrupt checkpoint header: {err}") from None

    params: dict[str, np.ndarray] = {}
    offset = 12 + header_len
    for entry in header["arrays"]:
        rows, cols = entry["rows"], entry["cols"]
        if len(blob) < offset + 8:
            raise CheckpointError(f"truncated checkpoint payload: {path}")
        count = struct.unpack_from("<Q", blob, offset)[0]
        offset += 8
        if count != rows * cols:
            raise CheckpointError(
                f"array '{entry['name']}' length {count} != {rows}x{cols}"
            )
        end = offset + 8 * count
        if len(blob) < end:
            raise CheckpointError(f"truncated array '{entry['name']}': {path}")
        params[entry["name"]] = (
            np.frombuffer(blob[offset:end], dtype="<f8").reshape(rows, cols).copy()
        )
        offset = end

    return Checkpoint(
        spec=ModelSpec.from_dict(header["spec"]),
        params=params,
        provenance=header.get("provenance", {}),
    )

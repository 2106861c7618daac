"""Checkpoint container format."""

import struct

import numpy as np
import pytest

from molgnn.checkpoint import (
    Checkpoint,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from molgnn.models import ModelSpec, init_params


def make_checkpoint(seed=0):
    spec = ModelSpec(kind="gcn", n_tasks=2, hidden_size=8)
    params = init_params(spec, seed)
    return Checkpoint.from_tensors(spec, params, {"seed": seed, "best_epoch": 3})


def test_round_trip_bit_exact(tmp_path):
    ckpt = make_checkpoint()
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    back = load_checkpoint(path)
    assert back.spec.to_dict() == ckpt.spec.to_dict()
    assert back.provenance["best_epoch"] == 3
    assert set(back.params) == set(ckpt.params)
    for name, arr in ckpt.params.items():
        assert np.array_equal(back.params[name], arr)
        assert back.params[name].tobytes() == arr.tobytes()


def test_save_twice_identical_bytes(tmp_path):
    ckpt = make_checkpoint()
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(ckpt, p1)
    save_checkpoint(ckpt, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(make_checkpoint(), path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"XXXX"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_future_version_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(make_checkpoint(), path)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="version 99"):
        load_checkpoint(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(make_checkpoint(), path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 16])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_tensors_are_independent_copies(tmp_path):
    ckpt = make_checkpoint()
    tensors = ckpt.tensors()
    tensors["out.bias"].value += 1.0
    assert not np.array_equal(tensors["out.bias"].value, ckpt.params["out.bias"])

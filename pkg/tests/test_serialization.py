import json

import numpy as np
import pytest

from goft.errors import ConfigError
from goft.serialization import (adapter_from_checkpoint, decode_f64,
                                encode_f64, load_checkpoint, load_weights,
                                save_checkpoint, save_weights)
from goft.trainer import (AdamState, TrainConfig, get_flat_params,
                          make_adapter, set_flat_params)
from goft.adapter import FrozenWeight

RNG = np.random.default_rng(17)


def test_f64_round_trip_bitwise():
    arr = RNG.standard_normal((7, 2, 2))
    back = decode_f64(encode_f64(arr))
    np.testing.assert_array_equal(back, arr)
    assert back.dtype == np.float64


def test_checkpoint_round_trip(tmp_path):
    weight = FrozenWeight(W=RNG.standard_normal((8, 3)))
    adapter = make_adapter("qgoft", weight)
    set_flat_params(adapter, RNG.standard_normal(4 * 7))
    cfg = TrainConfig(method="qgoft", lam=0.05, seed=9, steps=120)
    opt = AdamState(m=RNG.standard_normal(28), v=np.abs(RNG.standard_normal(28)), t=17)

    path = tmp_path / "ckpt.json"
    save_checkpoint(path, adapter, cfg, next_step=60, opt=opt,
                    task_spec={"kind": "rotation-recovery"})
    doc = load_checkpoint(path)
    assert doc["method"] == "qgoft"
    assert doc["next_step"] == 60
    np.testing.assert_array_equal(doc["params_array"], get_flat_params(adapter))
    np.testing.assert_array_equal(doc["optimizer_state"].m, opt.m)
    np.testing.assert_array_equal(doc["optimizer_state"].v, opt.v)
    assert doc["optimizer_state"].t == 17

    rebuilt = adapter_from_checkpoint(doc, weight)
    np.testing.assert_array_equal(get_flat_params(rebuilt), get_flat_params(adapter))


def test_checkpoint_is_diffable_json(tmp_path):
    weight = FrozenWeight(W=RNG.standard_normal((4, 2)))
    adapter = make_adapter("goft", weight)
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, adapter, TrainConfig(method="goft"), next_step=0)
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1
    assert doc["plan"] == {"d": 4, "pairing": "binary-tree"}
    assert "param_l2" in doc["summary"]


def test_checkpoint_dim_mismatch(tmp_path):
    weight = FrozenWeight(W=RNG.standard_normal((8, 3)))
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, make_adapter("goft", weight),
                    TrainConfig(method="goft"), next_step=0)
    doc = load_checkpoint(path)
    with pytest.raises(ConfigError):
        adapter_from_checkpoint(doc, FrozenWeight(W=RNG.standard_normal((9, 3))))


def test_weight_file_round_trip(tmp_path):
    weight = FrozenWeight(W=RNG.standard_normal((5, 7)))
    path = tmp_path / "w.goftw"
    save_weights(path, weight)
    raw = path.read_bytes()
    assert raw[:6] == b"GOFTW\x00"
    back = load_weights(path)
    np.testing.assert_array_equal(back.W, weight.W)


def test_weight_file_bad_magic(tmp_path):
    path = tmp_path / "bad.goftw"
    path.write_bytes(b"NOTGOFT" + b"\x00" * 32)
    with pytest.raises(ConfigError):
        load_weights(path)


def test_weight_file_truncated(tmp_path):
    weight = FrozenWeight(W=RNG.standard_normal((5, 7)))
    path = tmp_path / "w.goftw"
    save_weights(path, weight)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ConfigError):
        load_weights(path)

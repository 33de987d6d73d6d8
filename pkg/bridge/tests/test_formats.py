"""The bridge writes files the chain tooling reads. These tests pin the
bytes against the reader side so the two packages cannot drift apart."""

import json

import numpy as np
import pytest

import policychain
import policychain.core
from policybridge import BridgeError
from policybridge.formats import (
    dataset_header,
    fmt_float,
    json_dumps,
    write_dataset,
    write_json,
    write_manifest,
    write_network,
)


def test_fmt_float_canonical_values():
    assert fmt_float(0.0) == "0"
    assert fmt_float(-0.0) == "0"
    assert fmt_float(1.0) == "1"
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(1.0 / 3.0) == "0.33333333333333331"


def test_fmt_float_rejects_non_finite():
    with pytest.raises(BridgeError):
        fmt_float(float("nan"))
    with pytest.raises(BridgeError):
        fmt_float(float("inf"))


def test_fmt_float_round_trips_doubles(rng):
    for x in rng.standard_normal(200) * 10.0 ** rng.integers(-8, 9, 200):
        assert float(fmt_float(x)) == x


def test_json_dumps_matches_chain_writer_bytes():
    doc = {
        "input": "state",
        "layers": [
            {"w": [[0.1, -2.0], [3.5, 0.0]], "b": [0.25, -0.0], "act": "relu"},
            {"w": [[1.0 / 3.0, 7.0]], "b": [1e-17], "act": "tanh"},
        ],
        "output_scale": [2.0],
    }
    assert json_dumps(doc) == policychain.core.json_dumps(doc)


def test_json_dumps_ends_with_newline():
    assert json_dumps({"a": 1}).endswith("\n")


def test_write_dataset_reads_back_through_chain_loader(tmp_path, rng):
    states = rng.standard_normal((40, 3))
    actions = rng.uniform(-1.0, 1.0, (40, 2))
    data_path = tmp_path / "dataset.csv"
    man_path = tmp_path / "manifest.json"
    write_dataset(states, actions, data_path)
    write_manifest(3, 2, [-1.0, -1.0], [1.0, 1.0], 4, man_path)

    ds = policychain.load_dataset(data_path, man_path)
    np.testing.assert_array_equal(ds.states, states)
    np.testing.assert_array_equal(ds.actions, actions)
    assert ds.state_dim == 3 and ds.action_dim == 2


def test_dataset_header_layout():
    assert dataset_header(2, 3) == "s0,s1,a0,a1,a2"


def test_write_dataset_validates_shapes(tmp_path):
    with pytest.raises(BridgeError, match="matching"):
        write_dataset(np.zeros((3, 2)), np.zeros((4, 1)), tmp_path / "d.csv")
    with pytest.raises(BridgeError):
        write_dataset(np.zeros(3), np.zeros((3, 1)), tmp_path / "d.csv")


def test_write_manifest_with_names(tmp_path):
    path = tmp_path / "manifest.json"
    write_manifest(2, 1, [-1.0], [1.0], 7, path,
                   feature_names=["x", "y"], action_names=["push"])
    man = policychain.load_manifest(path)
    assert man.episode_count == 7
    assert man.feature_names == ("x", "y")
    assert man.action_names == ("push",)


def test_write_network_loads_through_chain_reader(tmp_path, rng):
    w1 = rng.standard_normal((5, 3))
    b1 = rng.standard_normal(5)
    w2 = rng.standard_normal((2, 5))
    b2 = rng.standard_normal(2)
    path = tmp_path / "network.json"
    write_network([(w1, b1, "relu"), (w2, b2, "tanh")], "state", path,
                  output_scale=[1.5, 1.5])

    net = policychain.load_network(path)
    x = rng.standard_normal(3)
    expect = np.tanh(w2 @ np.maximum(w1 @ x + b1, 0.0) + b2) * 1.5
    got = policychain.forward(net, x)
    np.testing.assert_allclose(got, expect, rtol=0, atol=1e-15)


def test_write_network_doc_keys(tmp_path):
    path = tmp_path / "network.json"
    write_network([(np.eye(2), np.zeros(2), "linear")], "state_action", path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"input", "layers"}
    assert doc["input"] == "state_action"
    assert set(doc["layers"][0]) == {"w", "b", "act"}


def test_write_json_trailing_newline(tmp_path):
    path = tmp_path / "doc.json"
    write_json({"k": [1.0, 2.0]}, path)
    text = path.read_text()
    assert text.endswith("\n") and not text.endswith("\n\n")

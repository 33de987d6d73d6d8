"""Dataset ingestion, the float precision contract, and the ridge kernel."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from policychain.core import (
    DatasetManifest,
    InputError,
    NumericError,
    TransitionDataset,
    dataset_header,
    fmt_float,
    json_dumps,
    load_dataset,
    load_manifest,
    make_dataset,
    save_dataset,
    save_manifest,
    solve_ridge,
)

# ---------------------------------------------------------------------------
# precision contract


def test_fmt_float_zero_is_bare():
    assert fmt_float(0.0) == "0"
    assert fmt_float(-0.0) == "0"


def test_fmt_float_17_digits():
    assert fmt_float(1 / 3) == "0.33333333333333331"
    assert fmt_float(2.0) == "2"


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_fmt_float_rejects_nonfinite(bad):
    with pytest.raises(NumericError):
        fmt_float(bad)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x or (x == 0.0)


def test_json_dumps_parses_back_exact():
    doc = {"a": 1 / 3, "b": [2.0, -0.0], "c": {"d": 1e-300}}
    parsed = json.loads(json_dumps(doc))
    assert parsed["a"] == 1 / 3
    assert parsed["b"] == [2.0, 0.0]
    assert parsed["c"]["d"] == 1e-300


# ---------------------------------------------------------------------------
# ridge kernel; expected values frozen from tests/oracles/ridge_fixtures.py
# (exact Fraction arithmetic, printed as floats)

RIDGE_FIXTURES = [
    # X, Y, lam, penalize, expected W
    ([[1.0], [2.0]], [[2.0], [4.0]], 0.0, None, [[2.0]]),
    # (X'X + 1)^-1 X'Y = 10/6 = 5/3
    ([[1.0], [2.0]], [[2.0], [4.0]], 1.0, None, [[1.6666666666666667]]),
    ([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
     [[1.0, 2.0], [3.0, 4.0], [4.0, 6.0]], 0.0, None,
     [[1.0, 2.0], [3.0, 4.0]]),
    # G = [[2,1],[1,2]] + 2I, rhs = [3,3] -> [3/5, 3/5]
    ([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
     [[1.0], [1.0], [2.0]], 2.0, None, [[0.6], [0.6]]),
    # intercept column free of the penalty: w = 1, b = 7/3
    ([[1.0, 1.0], [2.0, 1.0], [3.0, 1.0]],
     [[2.0], [4.0], [7.0]], 3.0, [True, False],
     [[1.0], [2.3333333333333335]]),
]


@pytest.mark.parametrize("X, Y, lam, penalize, expected", RIDGE_FIXTURES)
def test_solve_ridge_frozen_fixtures(X, Y, lam, penalize, expected):
    W = solve_ridge(np.array(X), np.array(Y), lam, penalize=penalize)
    np.testing.assert_allclose(W, np.array(expected), atol=1e-8, rtol=0)


def test_solve_ridge_recovers_generator(rng):
    M = rng.normal(size=(4, 2))
    X = rng.normal(size=(50, 4))
    W = solve_ridge(X, X @ M, 0.0)
    np.testing.assert_allclose(W, M, atol=1e-8, rtol=0)


def test_solve_ridge_norm_shrinks_with_lambda(rng):
    X = rng.normal(size=(30, 3))
    Y = rng.normal(size=(30, 2))
    norms = [
        float(np.linalg.norm(solve_ridge(X, Y, lam)))
        for lam in (0.0, 0.1, 1.0, 10.0, 100.0)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))


def test_solve_ridge_singular_needs_lambda():
    X = np.array([[1.0, 1.0], [2.0, 2.0]])  # duplicated column
    with pytest.raises(NumericError, match="lambda"):
        solve_ridge(X, np.array([[1.0], [2.0]]), 0.0)


def test_solve_ridge_vector_target_squeezes():
    w = solve_ridge(np.array([[1.0], [2.0]]), np.array([2.0, 4.0]), 0.0)
    assert w.shape == (1,)
    assert abs(w[0] - 2.0) < 1e-12


def test_solve_ridge_input_errors():
    X = np.array([[1.0], [2.0]])
    with pytest.raises(InputError):
        solve_ridge(X, np.array([[1.0]]), 0.0)
    with pytest.raises(InputError):
        solve_ridge(X, np.array([[1.0], [2.0]]), -1.0)
    with pytest.raises(InputError):
        solve_ridge(np.array([1.0, 2.0]), np.array([1.0, 2.0]), 0.0)


# ---------------------------------------------------------------------------
# dataset construction


def test_make_dataset_identity_ingestion():
    ds = make_dataset([[0.0], [1.0]], [[0.0], [2.0]], [-5.0], [5.0])
    assert ds.n_rows == 2
    np.testing.assert_array_equal(ds.states, [[0.0], [1.0]])
    np.testing.assert_array_equal(ds.actions, [[0.0], [2.0]])


def test_make_dataset_clamps_to_bounds():
    ds = make_dataset([[0.0]], [[7.0]], [-5.0], [5.0])
    assert ds.actions[0, 0] == 5.0


def test_dataset_row_mismatch():
    with pytest.raises(InputError, match="row count"):
        make_dataset([[0.0], [1.0]], [[0.0]], [-1.0], [1.0])


def test_dataset_rejects_empty():
    with pytest.raises(InputError):
        make_dataset(np.empty((0, 1)), np.empty((0, 1)), [-1.0], [1.0])


def test_dataset_rejects_nonfinite():
    with pytest.raises(NumericError):
        make_dataset([[np.nan]], [[0.0]], [-1.0], [1.0])


def test_dataset_direct_construction_enforces_bounds():
    with pytest.raises(InputError, match="outside bounds"):
        TransitionDataset(
            states=np.array([[0.0]]), actions=np.array([[2.0]]),
            state_dim=1, action_dim=1,
            action_low=np.array([-1.0]), action_high=np.array([1.0]),
        )


def test_dataset_arrays_are_frozen():
    ds = make_dataset([[0.0]], [[0.5]], [-1.0], [1.0])
    with pytest.raises(ValueError):
        ds.states[0, 0] = 9.0


# ---------------------------------------------------------------------------
# file round trips


def _small_dataset():
    return make_dataset(
        [[0.1, -0.2], [1 / 3, 0.7]], [[0.5], [-0.25]], [-1.0], [1.0]
    )


def test_dataset_save_load_save_is_byte_identical(tmp_path):
    ds = _small_dataset()
    manifest = DatasetManifest(
        state_dim=2, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
        episode_count=1,
    )
    data, meta = tmp_path / "d.csv", tmp_path / "m.json"
    save_dataset(ds, data)
    save_manifest(manifest, meta)
    first = data.read_bytes()
    loaded = load_dataset(data, meta)
    np.testing.assert_array_equal(loaded.states, ds.states)
    np.testing.assert_array_equal(loaded.actions, ds.actions)
    save_dataset(loaded, data)
    assert data.read_bytes() == first


def test_load_dataset_header_mismatch(tmp_path):
    meta = tmp_path / "m.json"
    save_manifest(DatasetManifest(
        state_dim=1, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
    ), meta)
    data = tmp_path / "d.csv"
    data.write_text("s0,s1,a0\n0,0,0\n")
    with pytest.raises(InputError, match="header"):
        load_dataset(data, meta)


def test_load_dataset_names_bad_cell_line(tmp_path):
    meta = tmp_path / "m.json"
    save_manifest(DatasetManifest(
        state_dim=1, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
    ), meta)
    data = tmp_path / "d.csv"
    data.write_text("s0,a0\n0.0,0.0\n0.5,oops\n")
    with pytest.raises(InputError, match=r":3: non-numeric cell 'oops'"):
        load_dataset(data, meta)


def test_load_dataset_rejects_nonfinite_row(tmp_path):
    meta = tmp_path / "m.json"
    save_manifest(DatasetManifest(
        state_dim=1, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
    ), meta)
    data = tmp_path / "d.csv"
    data.write_text("s0,a0\n0.0,0.0\nnan,0.0\n")
    with pytest.raises(InputError, match=":3"):
        load_dataset(data, meta)


def test_load_dataset_missing_files(tmp_path):
    meta = tmp_path / "m.json"
    save_manifest(DatasetManifest(
        state_dim=1, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
    ), meta)
    with pytest.raises(InputError, match="not found"):
        load_dataset(tmp_path / "missing.csv", meta)
    with pytest.raises(InputError, match="not found"):
        load_dataset(tmp_path / "missing.csv", tmp_path / "missing.json")


def test_load_dataset_clamps_like_ingest(tmp_path):
    meta = tmp_path / "m.json"
    save_manifest(DatasetManifest(
        state_dim=1, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
    ), meta)
    data = tmp_path / "d.csv"
    data.write_text("s0,a0\n0.0,7.0\n")
    assert load_dataset(data, meta).actions[0, 0] == 1.0


def test_dataset_header_names():
    assert dataset_header(2, 1) == "s0,s1,a0"


# ---------------------------------------------------------------------------
# manifest


def test_manifest_round_trip_with_names(tmp_path):
    m = DatasetManifest(
        state_dim=2, action_dim=1,
        action_low=np.array([-1.0]), action_high=np.array([1.0]),
        episode_count=3,
        feature_names=("px", "py"), action_names=("thrust",),
    )
    path = tmp_path / "m.json"
    save_manifest(m, path)
    back = load_manifest(path)
    assert back == m
    save_manifest(back, path)
    assert load_manifest(path) == m


def test_manifest_validation():
    low, high = np.array([-1.0]), np.array([1.0])
    with pytest.raises(InputError):
        DatasetManifest(state_dim=0, action_dim=1, action_low=low, action_high=high)
    with pytest.raises(InputError):
        DatasetManifest(state_dim=1, action_dim=1, action_low=low,
                        action_high=high, episode_count=-1)
    with pytest.raises(InputError):
        DatasetManifest(state_dim=2, action_dim=1, action_low=low,
                        action_high=high, feature_names=("only_one",))
    with pytest.raises(InputError):
        DatasetManifest(state_dim=1, action_dim=1, action_low=np.array([-1.0, 0.0]),
                        action_high=high)


def test_manifest_missing_key(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"state_dim": 1}\n')
    with pytest.raises(InputError, match="missing key"):
        load_manifest(path)

"""Writers for the toolkit's on-disk formats.

The consumer documents its formats as: JSON with floats printed at 17
significant digits (zero as "0", indent 1, trailing newline), CSV
datasets with an s*/a* header row, and a manifest document naming the
dataset's dimensions and bounds. These writers produce those bytes
without importing the consumer, so the bridge stays a standalone
producer; golden tests on the consumer side keep the two in sync.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import BridgeError


def fmt_float(x: float) -> str:
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise BridgeError("non-finite value in output document")
    if x == 0.0:
        return "0"
    return format(x, ".17g")


class _Float17Encoder(json.JSONEncoder):
    # json.dump's C path ignores custom float repr; force the python one
    def iterencode(self, o, _one_shot=False):
        return json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            json.encoder.encode_basestring_ascii,
            self.indent,
            fmt_float,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            False,
        )(o, 0)


def json_dumps(obj) -> str:
    return json.dumps(obj, cls=_Float17Encoder, indent=1) + "\n"


def write_json(obj, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json_dumps(obj))


def dataset_header(state_dim: int, action_dim: int) -> str:
    cols = [f"s{i}" for i in range(state_dim)] + [f"a{i}" for i in range(action_dim)]
    return ",".join(cols)


def write_dataset(states: np.ndarray, actions: np.ndarray,
                  path: str | os.PathLike) -> None:
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    if states.ndim != 2 or actions.ndim != 2 or states.shape[0] != actions.shape[0]:
        raise BridgeError("states and actions must be matching 2-D tables")
    if not (np.isfinite(states).all() and np.isfinite(actions).all()):
        raise BridgeError("non-finite value in recorded data")
    table = np.hstack([states, actions])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset_header(states.shape[1], actions.shape[1]) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")


def write_manifest(state_dim: int, action_dim: int, action_low, action_high,
                   episode_count: int, path: str | os.PathLike,
                   feature_names=None, action_names=None) -> None:
    doc = {
        "state_dim": int(state_dim),
        "action_dim": int(action_dim),
        "action_low": [float(v) for v in np.asarray(action_low).ravel()],
        "action_high": [float(v) for v in np.asarray(action_high).ravel()],
        "episode_count": int(episode_count),
    }
    if feature_names is not None:
        doc["feature_names"] = list(feature_names)
    if action_names is not None:
        doc["action_names"] = list(action_names)
    write_json(doc, path)


def write_network(layers, input_kind: str, path: str | os.PathLike,
                  output_scale=None) -> None:
    """Write a dense network document: layers are (weights, bias, act)."""
    doc = {
        "input": input_kind,
        "layers": [
            {"w": [list(map(float, row)) for row in np.asarray(w, dtype=np.float64)],
             "b": list(map(float, np.asarray(b, dtype=np.float64))),
             "act": act}
            for w, b, act in layers
        ],
    }
    if output_scale is not None:
        doc["output_scale"] = [float(v) for v in np.asarray(output_scale).ravel()]
    write_json(doc, path)

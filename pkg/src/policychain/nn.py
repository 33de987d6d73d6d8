"""Forward-only inference for exported feed-forward networks.

Provides the teacher's critic Q(s, a) and optional actor pi(s) from
weight files written by an exporting framework. Only inference lives
here; there is no training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InputError, NumericError, read_json, write_json

ACTIVATIONS = ("relu", "tanh", "linear")


@dataclass(frozen=True)
class Layer:
    w: np.ndarray  # out x in
    b: np.ndarray  # out
    act: str

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise InputError("layer weight/bias shapes inconsistent")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise NumericError("layer contains non-finite weights")
        if self.act not in ACTIVATIONS:
            raise InputError(f"unknown activation {self.act!r}")


@dataclass(frozen=True)
class MlpNetwork:
    """A plain dense network: affine layers with relu/tanh/linear activations."""

    layers: tuple[Layer, ...]
    input_kind: str = "state"  # "state" or "state_action"
    output_scale: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise InputError("network has no layers")
        if self.input_kind not in ("state", "state_action"):
            raise InputError(f"unknown input kind {self.input_kind!r}")
        for k in range(len(self.layers) - 1):
            out_k = self.layers[k].w.shape[0]
            in_next = self.layers[k + 1].w.shape[1]
            if out_k != in_next:
                raise InputError(
                    f"dimension chain break: layer {k} outputs {out_k}, "
                    f"layer {k + 1} expects {in_next}"
                )
        if self.output_scale is not None:
            scale = np.ascontiguousarray(self.output_scale, dtype=np.float64)
            scale.setflags(write=False)
            object.__setattr__(self, "output_scale", scale)
            if scale.shape != (self.output_size,):
                raise InputError("output_scale length must match output size")

    @property
    def input_size(self) -> int:
        return self.layers[0].w.shape[1]

    @property
    def output_size(self) -> int:
        return self.layers[-1].w.shape[0]


def load_network(path) -> MlpNetwork:
    """Load one network from its weight document."""
    doc = read_json(path)
    try:
        layers = tuple(
            Layer(
                w=np.asarray(spec["w"], dtype=np.float64),
                b=np.asarray(spec["b"], dtype=np.float64),
                act=spec["act"],
            )
            for spec in doc["layers"]
        )
        input_kind = doc["input"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed network document {path}: {exc}") from None
    scale = doc.get("output_scale")
    if scale is not None:
        scale = np.asarray(scale, dtype=np.float64)
    return MlpNetwork(layers=layers, input_kind=input_kind, output_scale=scale)


def save_network(net: MlpNetwork, path) -> None:
    doc = {
        "input": net.input_kind,
        "layers": [
            {"w": [list(map(float, row)) for row in layer.w],
             "b": list(map(float, layer.b)),
             "act": layer.act}
            for layer in net.layers
        ],
    }
    if net.output_scale is not None:
        doc["output_scale"] = list(map(float, net.output_scale))
    write_json(doc, path)


def _apply(act: str, z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    return z


def forward(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    """Run one input vector through the network."""
    h = np.asarray(x, dtype=np.float64)
    if h.shape != (net.input_size,):
        raise InputError(
            f"input length {h.shape} does not match network input {net.input_size}"
        )
    for layer in net.layers:
        h = _apply(layer.act, layer.w @ h + layer.b)
    if net.output_scale is not None:
        h = h * net.output_scale
    return h


def forward_batch(net: MlpNetwork, X: np.ndarray) -> np.ndarray:
    """Vectorized forward over N stacked input rows."""
    H = np.asarray(X, dtype=np.float64)
    if H.ndim != 2 or H.shape[1] != net.input_size:
        raise InputError(
            f"batch width {H.shape} does not match network input {net.input_size}"
        )
    for layer in net.layers:
        H = _apply(layer.act, H @ layer.w.T + layer.b)
    if net.output_scale is not None:
        H = H * net.output_scale
    return H


@dataclass(frozen=True)
class CriticOracle:
    """Action-value interface around exported critic (and optional actor) nets.

    ``mode`` picks between the first critic alone and the pessimistic
    minimum of twin critics. The state value V(s) is Q(s, actor(s)) when
    an actor was exported, otherwise Q at a caller-supplied fallback
    action (the dataset action recorded for that state).
    """

    q1: MlpNetwork
    q2: MlpNetwork | None = None
    actor: MlpNetwork | None = None
    mode: str = "q1_only"

    def __post_init__(self):
        if self.mode not in ("q1_only", "min_twin"):
            raise InputError(f"unknown critic mode {self.mode!r}")
        if self.mode == "min_twin" and self.q2 is None:
            raise InputError("min_twin mode requires a second critic")
        for net in (self.q1, self.q2):
            if net is None:
                continue
            if net.input_kind != "state_action":
                raise InputError("critic networks must take state_action input")
            if net.output_size != 1:
                raise InputError("critic networks must have scalar output")
        if self.actor is not None and self.actor.input_kind != "state":
            raise InputError("actor network must take state input")

    def q_value(self, s: np.ndarray, a: np.ndarray) -> float:
        x = np.concatenate([np.asarray(s, dtype=np.float64), np.asarray(a, dtype=np.float64)])
        q = float(forward(self.q1, x)[0])
        if self.mode == "min_twin":
            q = min(q, float(forward(self.q2, x)[0]))
        return q

    def q_values(self, S: np.ndarray, A: np.ndarray) -> np.ndarray:
        X = np.hstack([np.asarray(S, dtype=np.float64), np.asarray(A, dtype=np.float64)])
        q = forward_batch(self.q1, X)[:, 0]
        if self.mode == "min_twin":
            q = np.minimum(q, forward_batch(self.q2, X)[:, 0])
        return q

    def state_value(self, s: np.ndarray, fallback_action: np.ndarray | None = None) -> float:
        if self.actor is not None:
            return self.q_value(s, forward(self.actor, np.asarray(s, dtype=np.float64)))
        if fallback_action is None:
            raise InputError("no actor network; a fallback action is required")
        return self.q_value(s, fallback_action)

    def state_values(self, S: np.ndarray, FB: np.ndarray | None = None) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        if self.actor is not None:
            return self.q_values(S, forward_batch(self.actor, S))
        if FB is None:
            raise InputError("no actor network; fallback actions are required")
        return self.q_values(S, FB)

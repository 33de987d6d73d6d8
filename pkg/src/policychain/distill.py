"""Chain construction, labeling, routing, and policy serialization.

The distiller repeatedly fits a subpolicy on the current region, scores
its actions against the critic's notion of recorded-behavior value, and
splits off the under-served rows with a linear gate. Well-served rows
(label 1) stay at the node; zero-labeled rows form the child region.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    InputError,
    RegionLabels,
    TransitionDataset,
    fmt_float,
    read_json,
    write_json,
)
from .learners import (
    LinearSubpolicy,
    SvmGate,
    fit_subpolicy,
    fit_svm,
    gate_predict,
    gate_predict_batch,
    predict_action,
    predict_actions,
)

logger = logging.getLogger(__name__)

POLICY_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DistillConfig:
    value_threshold: float = 1.0
    n_iteration: int = 8
    min_region_size: int = 16
    ridge_lambda: float = 1e-6
    svm_c: float = 10.0
    svm_epochs: int = 300
    seed: int = 0
    critic_mode: str = "q1_only"

    def __post_init__(self):
        if self.value_threshold <= 0:
            raise InputError("value_threshold must be positive")
        if self.n_iteration < 1:
            raise InputError("n_iteration must be >= 1")
        if self.min_region_size < 1:
            raise InputError("min_region_size must be >= 1")
        if self.ridge_lambda < 0:
            raise InputError("ridge_lambda must be >= 0")
        if self.svm_c <= 0:
            raise InputError("svm_c must be positive")
        if self.svm_epochs < 1:
            raise InputError("svm_epochs must be >= 1")
        if self.critic_mode not in ("q1_only", "min_twin"):
            raise InputError(f"unknown critic mode {self.critic_mode!r}")


@dataclass(frozen=True)
class PartitionNode:
    index: int
    subpolicy: LinearSubpolicy
    gate: SvmGate | None
    train_size: int
    positive_fraction: float

    def __post_init__(self):
        if self.index < 0:
            raise InputError("node index must be >= 0")
        if self.train_size < 1:
            raise InputError("node train_size must be >= 1")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise InputError("positive_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class DistilledPolicy:
    """Ordered node chain; the last node is terminal and has no gate."""

    nodes: tuple[PartitionNode, ...]
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    config: DistillConfig

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        for name in ("action_low", "action_high"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.nodes:
            raise InputError("policy needs at least one node")
        for i, node in enumerate(self.nodes):
            if node.index != i:
                raise InputError("node indices must run 0..k-1 in order")
            terminal = i == len(self.nodes) - 1
            if terminal and node.gate is not None:
                raise InputError("terminal node must not carry a gate")
            if not terminal and node.gate is None:
                raise InputError(f"non-terminal node {i} is missing its gate")
            if node.subpolicy.state_dim != self.state_dim:
                raise InputError(f"node {i} subpolicy state width mismatch")
            if node.subpolicy.action_dim != self.action_dim:
                raise InputError(f"node {i} subpolicy action width mismatch")
        if self.action_low.shape != (self.action_dim,) or self.action_high.shape != (self.action_dim,):
            raise InputError("policy bounds must have one entry per action unit")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def label_region(oracle, states, subpolicy_actions, dataset_actions,
                 value_threshold: float) -> RegionLabels:
    """Label rows 1 where the fitted action is at least as valuable as
    recorded behavior: q - v >= (tau - 1) * |v|.

    For v > 0 this is the ratio rule q/v >= tau; the subtracted form
    keeps the comparison order-correct when returns are negative. Rows
    with a non-finite critic output get label 0 and are counted.
    """
    if value_threshold <= 0:
        raise InputError("value_threshold must be positive")
    S = np.asarray(states, dtype=np.float64)
    A_fit = np.asarray(subpolicy_actions, dtype=np.float64)
    A_data = np.asarray(dataset_actions, dtype=np.float64)
    if not (S.shape[0] == A_fit.shape[0] == A_data.shape[0]):
        raise InputError("labeling inputs must have equal row counts")
    q = np.asarray(oracle.q_values(S, A_fit), dtype=np.float64)
    v = np.asarray(oracle.state_values(S, A_data), dtype=np.float64)
    finite = np.isfinite(q) & np.isfinite(v)
    labels = np.zeros(S.shape[0], dtype=np.int8)
    ok = finite
    labels[ok] = (q[ok] - v[ok] >= (value_threshold - 1.0) * np.abs(v[ok])).astype(np.int8)
    bad = int((~finite).sum())
    if bad:
        logger.warning("label_region: %d rows had non-finite critic values; labeled 0", bad)
    return RegionLabels(labels=labels, positive_count=int(labels.sum()),
                        nonfinite_count=bad)


def distill(dataset: TransitionDataset, oracle, cfg: DistillConfig) -> DistilledPolicy:
    """Build the node chain on the recorded dataset.

    Each iteration fits on the current region and either terminates
    (iteration budget reached, labels single-class, or the zero-labeled
    remainder is too small to split again) or gates the well-served rows
    and recurses on the rest.
    """
    if cfg.min_region_size < dataset.state_dim + 1:
        raise InputError(
            f"min_region_size {cfg.min_region_size} must be >= state_dim + 1 "
            f"= {dataset.state_dim + 1}"
        )
    bounds = (dataset.action_low, dataset.action_high)
    idx = np.arange(dataset.n_rows)
    nodes = []
    for it in range(cfg.n_iteration):
        S = dataset.states[idx]
        A = dataset.actions[idx]
        sub = fit_subpolicy(S, A, cfg.ridge_lambda, bounds)
        fitted = predict_actions(sub, S)
        labels = label_region(oracle, S, fitted, A, cfg.value_threshold)
        n = idx.shape[0]
        pos = labels.positive_count
        zero_local = np.flatnonzero(labels.labels == 0)
        last = (
            it == cfg.n_iteration - 1
            or pos == n
            or pos == 0
            or zero_local.shape[0] < cfg.min_region_size
        )
        gate = None
        if not last:
            gate = fit_svm(S, labels, cfg.svm_c, cfg.svm_epochs, seed=cfg.seed + it)
        nodes.append(PartitionNode(index=it, subpolicy=sub, gate=gate,
                                   train_size=n, positive_fraction=pos / n))
        if last:
            break
        child = idx[zero_local]
        assert child.shape[0] < n  # region sizes strictly decrease
        idx = child
    return DistilledPolicy(nodes=tuple(nodes), state_dim=dataset.state_dim,
                           action_dim=dataset.action_dim,
                           action_low=dataset.action_low,
                           action_high=dataset.action_high, config=cfg)


def route(policy: DistilledPolicy, s) -> tuple[np.ndarray, int]:
    """Serve one state: first node whose gate accepts, else the terminal."""
    s = np.asarray(s, dtype=np.float64)
    for node in policy.nodes[:-1]:
        if gate_predict(node.gate, s) == 1:
            return predict_action(node.subpolicy, s), node.index
    node = policy.nodes[-1]
    return predict_action(node.subpolicy, s), node.index


def route_batch(policy: DistilledPolicy, S) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized route over stacked states; returns (actions, node indices)."""
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    which = np.full(n, policy.n_nodes - 1, dtype=np.int64)
    undecided = np.arange(n)
    for node in policy.nodes[:-1]:
        if undecided.shape[0] == 0:
            break
        hit = gate_predict_batch(node.gate, S[undecided]) == 1
        which[undecided[hit]] = node.index
        undecided = undecided[~hit]
    actions = np.empty((n, policy.action_dim))
    for node in policy.nodes:
        rows = np.flatnonzero(which == node.index)
        if rows.shape[0]:
            actions[rows] = predict_actions(node.subpolicy, S[rows])
    return actions, which


def _node_doc(node: PartitionNode) -> dict:
    doc = {}
    if node.gate is not None:
        doc["gate"] = {
            "w": [float(x) for x in node.gate.w],
            "b": float(node.gate.b),
            "mean": [float(x) for x in node.gate.mean],
            "scale": [float(x) for x in node.gate.scale],
        }
    doc["subpolicy"] = {
        "W": [[float(x) for x in row] for row in node.subpolicy.W],
        "b": [float(x) for x in node.subpolicy.b],
    }
    doc["train_size"] = node.train_size
    doc["positive_fraction"] = float(node.positive_fraction)
    return doc


def save_policy(policy: DistilledPolicy, path) -> None:
    cfg = policy.config
    doc = {
        "version": POLICY_FORMAT_VERSION,
        "state_dim": policy.state_dim,
        "action_dim": policy.action_dim,
        "bounds": {
            "low": [float(x) for x in policy.action_low],
            "high": [float(x) for x in policy.action_high],
        },
        "config": {
            "value_threshold": float(cfg.value_threshold),
            "n_iteration": cfg.n_iteration,
            "min_region_size": cfg.min_region_size,
            "ridge_lambda": float(cfg.ridge_lambda),
            "svm_c": float(cfg.svm_c),
            "svm_epochs": cfg.svm_epochs,
            "seed": cfg.seed,
            "critic_mode": cfg.critic_mode,
        },
        "nodes": [_node_doc(node) for node in policy.nodes],
    }
    write_json(doc, path)


def load_policy(path) -> DistilledPolicy:
    doc = read_json(path)
    try:
        if doc["version"] != POLICY_FORMAT_VERSION:
            raise InputError(
                f"unsupported policy format version {doc['version']!r} in {path}"
            )
        low = np.asarray(doc["bounds"]["low"], dtype=np.float64)
        high = np.asarray(doc["bounds"]["high"], dtype=np.float64)
        c = doc["config"]
        cfg = DistillConfig(
            value_threshold=float(c["value_threshold"]),
            n_iteration=int(c["n_iteration"]),
            min_region_size=int(c["min_region_size"]),
            ridge_lambda=float(c["ridge_lambda"]),
            svm_c=float(c["svm_c"]),
            svm_epochs=int(c["svm_epochs"]),
            seed=int(c["seed"]),
            critic_mode=c["critic_mode"],
        )
        nodes = []
        for i, nd in enumerate(doc["nodes"]):
            gate = None
            if "gate" in nd:
                g = nd["gate"]
                gate = SvmGate(
                    w=np.asarray(g["w"], dtype=np.float64),
                    b=float(g["b"]),
                    mean=np.asarray(g["mean"], dtype=np.float64),
                    scale=np.asarray(g["scale"], dtype=np.float64),
                )
            sp = nd["subpolicy"]
            sub = LinearSubpolicy(
                W=np.asarray(sp["W"], dtype=np.float64),
                b=np.asarray(sp["b"], dtype=np.float64),
                action_low=low,
                action_high=high,
            )
            nodes.append(PartitionNode(
                index=i, subpolicy=sub, gate=gate,
                train_size=int(nd["train_size"]),
                positive_fraction=float(nd["positive_fraction"]),
            ))
        return DistilledPolicy(
            nodes=tuple(nodes),
            state_dim=int(doc["state_dim"]),
            action_dim=int(doc["action_dim"]),
            action_low=low, action_high=high, config=cfg,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed policy document {path}: {exc}") from None


def _gate_raw_units(gate: SvmGate) -> tuple[np.ndarray, float]:
    # w.(s - mean)/scale + b == (w/scale).s + (b - w.mean/scale)
    w_raw = gate.w / gate.scale
    b_raw = gate.b - float(w_raw @ gate.mean)
    return w_raw, b_raw


def inspect_policy(policy: DistilledPolicy, feature_names=None, action_names=None) -> str:
    """Render a plain-text report of every node's coefficients.

    Gate hyperplanes are shown in both standardized and raw state units;
    subpolicy rows list features sorted by absolute weight so the
    dominant inputs read first.
    """
    fnames = feature_names or [f"s{j}" for j in range(policy.state_dim)]
    anames = action_names or [f"a{i}" for i in range(policy.action_dim)]
    if len(fnames) != policy.state_dim or len(anames) != policy.action_dim:
        raise InputError("name list lengths must match policy dimensions")
    out = io.StringIO()
    out.write(f"policy: {policy.n_nodes} nodes, state_dim={policy.state_dim}, "
              f"action_dim={policy.action_dim}\n")
    for node in policy.nodes:
        kind = "terminal" if node.gate is None else "gated"
        out.write(f"\nnode {node.index} ({kind}) "
                  f"train_size={node.train_size} "
                  f"positive_fraction={fmt_float(node.positive_fraction)}\n")
        if node.gate is not None:
            w_raw, b_raw = _gate_raw_units(node.gate)
            order = np.argsort(-np.abs(w_raw), kind="stable")
            terms = " ".join(f"{fnames[j]}={fmt_float(w_raw[j])}" for j in order)
            out.write(f"  gate (raw units, serve if > 0): {terms} "
                      f"bias={fmt_float(b_raw)}\n")
            terms_std = " ".join(
                f"{fnames[j]}={fmt_float(node.gate.w[j])}" for j in order
            )
            out.write(f"  gate (standardized): {terms_std} "
                      f"bias={fmt_float(node.gate.b)}\n")
        for i in range(policy.action_dim):
            row = node.subpolicy.W[i]
            order = np.argsort(-np.abs(row), kind="stable")
            terms = " ".join(f"{fnames[j]}={fmt_float(row[j])}" for j in order)
            out.write(f"  {anames[i]}: {terms} bias={fmt_float(node.subpolicy.b[i])}\n")
    return out.getvalue()

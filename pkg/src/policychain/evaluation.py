"""Scoring a distilled policy: seeded rollouts, action fidelity against
the recorded dataset, and decision-boundary grids for plotting.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import InputError, NumericError, TransitionDataset, fmt_float, write_json
from .distill import DistilledPolicy, route, route_batch
from .envs import ProtocolError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    episode_returns: tuple
    mean: float
    std: float
    episodes: int
    node_usage: dict
    subpolicy_count: int
    valid: bool = True

    def __post_init__(self):
        object.__setattr__(self, "episode_returns",
                           tuple(float(r) for r in self.episode_returns))
        if self.episodes != len(self.episode_returns):
            raise InputError("episode count does not match returns length")


def make_report(returns, node_usage, subpolicy_count, valid) -> EvalReport:
    returns = [float(r) for r in returns]
    n = len(returns)
    mean = float(np.mean(returns)) if n else 0.0
    std = float(np.std(returns, ddof=1)) if n > 1 else 0.0
    return EvalReport(
        episode_returns=tuple(returns), mean=mean, std=std, episodes=n,
        node_usage=dict(sorted(node_usage.items())),
        subpolicy_count=subpolicy_count, valid=valid,
    )


def rollout(env, policy: DistilledPolicy, episodes: int, base_seed: int) -> EvalReport:
    """Run seeded episodes (episode e uses base_seed + e), undiscounted.

    Node usage counts each routed step of completed episodes. An
    environment failure stops early and flags the partial report
    invalid rather than raising.
    """
    if episodes < 1:
        raise InputError("episodes must be >= 1")
    spec = env.spec()
    if spec.state_dim != policy.state_dim or spec.action_dim != policy.action_dim:
        raise InputError("environment and policy dimensions differ")
    returns = []
    usage = Counter()
    valid = True
    for e in range(episodes):
        ep_usage = Counter()
        ep_return = 0.0
        try:
            obs = env.reset(base_seed + e)
            while True:
                action, node = route(policy, obs)
                ep_usage[node] += 1
                res = env.step(action)
                ep_return += res.reward
                obs = res.observation
                if res.terminated or res.truncated:
                    break
        except (ProtocolError, NumericError, OSError) as exc:
            logger.warning("rollout aborted at episode %d: %s", e, exc)
            valid = False
            break
        returns.append(ep_return)
        usage.update(ep_usage)
    return make_report(returns, usage, policy.n_nodes, valid)


@dataclass(frozen=True)
class FidelityReport:
    global_mse: float
    per_node_mse: dict = field(default_factory=dict)
    per_node_count: dict = field(default_factory=dict)


def fidelity(policy: DistilledPolicy, dataset: TransitionDataset) -> FidelityReport:
    """Mean squared action error of routed predictions, ||a_hat - a||^2
    averaged over rows, globally and per serving node.
    """
    if dataset.state_dim != policy.state_dim or dataset.action_dim != policy.action_dim:
        raise InputError("dataset and policy dimensions differ")
    predicted, nodes = route_batch(policy, dataset.states)
    err = ((predicted - dataset.actions) ** 2).sum(axis=1)
    per_mse, per_count = {}, {}
    for idx in range(policy.n_nodes):
        rows = nodes == idx
        count = int(rows.sum())
        if count:
            per_mse[idx] = float(err[rows].mean())
            per_count[idx] = count
    return FidelityReport(global_mse=float(err.mean()),
                          per_node_mse=per_mse, per_node_count=per_count)


def boundary_grid(policy: DistilledPolicy, dim_x: int, dim_y: int,
                  x_range, y_range, resolution: int,
                  fill_value: float = 0.0) -> np.ndarray:
    """Table of (x, y, serving node) over a 2-D slice of the state space.

    All state components other than dim_x/dim_y sit at fill_value. Rows
    run x-major over a resolution x resolution inclusive lattice.
    """
    if dim_x == dim_y:
        raise InputError("dim_x and dim_y must differ")
    for d in (dim_x, dim_y):
        if not 0 <= d < policy.state_dim:
            raise InputError(f"slice dimension {d} outside state width {policy.state_dim}")
    if resolution < 2:
        raise InputError("resolution must be >= 2")
    xs = np.linspace(float(x_range[0]), float(x_range[1]), resolution)
    ys = np.linspace(float(y_range[0]), float(y_range[1]), resolution)
    states = np.full((resolution * resolution, policy.state_dim), float(fill_value))
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    states[:, dim_x] = gx.ravel()
    states[:, dim_y] = gy.ravel()
    _, nodes = route_batch(policy, states)
    table = np.empty((resolution * resolution, 3))
    table[:, 0] = gx.ravel()
    table[:, 1] = gy.ravel()
    table[:, 2] = nodes
    return table


def save_grid(table: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,node\n")
        for x, y, node in table:
            fh.write(f"{fmt_float(x)},{fmt_float(y)},{int(node)}\n")


def save_report(report: EvalReport, path) -> None:
    doc = {
        "episodes": report.episodes,
        "mean": report.mean,
        "std": report.std,
        "valid": report.valid,
        "subpolicy_count": report.subpolicy_count,
        "node_usage": {str(k): int(v) for k, v in sorted(report.node_usage.items())},
        "episode_returns": list(report.episode_returns),
    }
    write_json(doc, path)


def save_episode_table(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("episode,return\n")
        for e, r in enumerate(report.episode_returns):
            fh.write(f"{e},{fmt_float(r)}\n")

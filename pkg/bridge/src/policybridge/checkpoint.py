"""Loading TD3 checkpoints saved as torch state dicts.

The expected parameter naming follows the stock StableBaselines3 TD3
policy ("actor.mu.<i>.weight", "critic.qf0.<i>.weight", ...), so a
checkpoint is produced from a trained SB3 model with::

    torch.save({"state_dict": model.policy.state_dict(),
                "action_low": model.action_space.low.tolist(),
                "action_high": model.action_space.high.tolist(),
                "env_id": "LunarLanderContinuous-v3"}, path)

Target-network copies are ignored. Hidden layers are ReLU, the actor
head is tanh scaled by the action bound, critic heads are linear; that
is the TD3 architecture the naming implies, and nothing else is
accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import BridgeError

ACTOR_PREFIX = "actor.mu"
CRITIC_PREFIXES = ("critic.qf0", "critic.qf1")
_PARAM = re.compile(r"^(\d+)\.(weight|bias)$")


@dataclass(frozen=True)
class Checkpoint:
    actor: tuple          # ((w, b), ...) float64 arrays, last layer tanh
    critics: tuple        # two critic stacks with the same shape contract
    action_low: np.ndarray
    action_high: np.ndarray
    env_id: str

    @property
    def obs_dim(self) -> int:
        return self.actor[0][0].shape[1]

    @property
    def action_dim(self) -> int:
        return self.actor[-1][0].shape[0]


def _to_array(tensor, key: str) -> np.ndarray:
    try:
        arr = tensor.detach().cpu().numpy()
    except AttributeError:
        raise BridgeError(f"parameter {key!r} is not a tensor") from None
    return np.asarray(arr, dtype=np.float64)


def _collect_stack(state_dict: dict, prefix: str) -> tuple:
    """Gather `prefix.<i>.weight/bias` pairs in layer order."""
    found: dict[int, dict] = {}
    for key in state_dict:
        if not key.startswith(prefix + "."):
            continue
        tail = key[len(prefix) + 1:]
        m = _PARAM.match(tail)
        if m is None:
            raise BridgeError(
                f"unsupported layer type at {prefix}: parameter {tail!r} "
                "(only dense weight/bias stacks are supported)")
        idx, kind = int(m.group(1)), m.group(2)
        arr = _to_array(state_dict[key], key)
        want_axes = 2 if kind == "weight" else 1
        if arr.ndim != want_axes:
            raise BridgeError(
                f"unsupported layer type at {prefix}.{idx}: {kind} has "
                f"{arr.ndim} axes (only dense layers are supported)")
        found.setdefault(idx, {})[kind] = arr
    if not found:
        raise BridgeError(f"checkpoint has no parameters under {prefix!r}")
    stack = []
    for idx in sorted(found):
        pair = found[idx]
        if "weight" not in pair or "bias" not in pair:
            raise BridgeError(f"layer {prefix}.{idx} is missing its weight or bias")
        w, b = pair["weight"], pair["bias"]
        if b.shape != (w.shape[0],):
            raise BridgeError(f"layer {prefix}.{idx} bias length does not match its weight")
        if stack and w.shape[1] != stack[-1][0].shape[0]:
            raise BridgeError(f"dimension chain break at {prefix}.{idx}")
        stack.append((w, b))
    return tuple(stack)


def load_checkpoint(path) -> Checkpoint:
    import torch

    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise BridgeError(f"checkpoint not found: {path}") from None
    except Exception as exc:
        raise BridgeError(f"cannot read checkpoint {path}: {exc}") from None
    if not isinstance(blob, dict) or "state_dict" not in blob:
        raise BridgeError(
            f"checkpoint {path} is not a dict with a 'state_dict' entry")
    for key in ("action_low", "action_high"):
        if key not in blob:
            raise BridgeError(f"checkpoint {path} is missing {key!r}")

    sd = blob["state_dict"]
    actor = _collect_stack(sd, ACTOR_PREFIX)
    critics = tuple(_collect_stack(sd, p) for p in CRITIC_PREFIXES)

    low = np.asarray(blob["action_low"], dtype=np.float64).ravel()
    high = np.asarray(blob["action_high"], dtype=np.float64).ravel()
    d_a = actor[-1][0].shape[0]
    if low.shape != (d_a,) or high.shape != (d_a,):
        raise BridgeError("action bounds length does not match the actor head")
    if not np.array_equal(low, -high):
        raise BridgeError("asymmetric action bounds are not supported "
                          "(the tanh head scales to [-high, high])")
    obs_dim = actor[0][0].shape[1]
    for i, stack in enumerate(critics):
        if stack[0][0].shape[1] != obs_dim + d_a:
            raise BridgeError(f"critic qf{i} input width is not obs_dim + action_dim")
        if stack[-1][0].shape[0] != 1:
            raise BridgeError(f"critic qf{i} head is not scalar")
    return Checkpoint(actor=actor, critics=critics, action_low=low,
                      action_high=high, env_id=str(blob.get("env_id", "")))


def actor_forward(ckpt: Checkpoint, obs: np.ndarray) -> np.ndarray:
    """Deterministic policy action: relu MLP, tanh head, bound scaling."""
    h = np.asarray(obs, dtype=np.float64)
    squeeze = h.ndim == 1
    if squeeze:
        h = h[None, :]
    for w, b in ckpt.actor[:-1]:
        h = np.maximum(h @ w.T + b, 0.0)
    w, b = ckpt.actor[-1]
    out = np.tanh(h @ w.T + b) * ckpt.action_high
    return out[0] if squeeze else out

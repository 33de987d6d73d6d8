"""Recording deterministic actor rollouts into the toolkit's dataset files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint, actor_forward, load_checkpoint
from .envs import make_bridge_env
from .errors import BridgeError
from .formats import write_dataset, write_manifest


def record_dataset(checkpoint, env_id: str, episodes: int, seed: int,
                   out_dir) -> tuple[Path, Path]:
    """Roll the checkpoint's actor and write dataset.csv + manifest.json.

    Episode e resets with seed + e. The recorded action is the actor's
    deterministic output (no exploration noise), clipped to the action
    bounds like the executed one.
    """
    if episodes < 1:
        raise BridgeError("episodes must be >= 1")
    ckpt = checkpoint
    if not isinstance(ckpt, Checkpoint):
        ckpt = load_checkpoint(checkpoint)
    env = make_bridge_env(env_id)
    try:
        if env.obs_dim != ckpt.obs_dim or env.action_dim != ckpt.action_dim:
            raise BridgeError(
                f"checkpoint was trained on {ckpt.obs_dim}/{ckpt.action_dim} "
                f"dims but {env_id!r} is {env.obs_dim}/{env.action_dim}")
        states, actions = [], []
        for e in range(episodes):
            obs = env.reset(seed + e)
            while True:
                a = np.clip(actor_forward(ckpt, obs),
                            env.action_low, env.action_high)
                states.append(obs)
                actions.append(a)
                obs, _, terminated, truncated = env.step(a)
                if terminated or truncated:
                    break
    finally:
        env.close()

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset_path = out / "dataset.csv"
    manifest_path = out / "manifest.json"
    write_dataset(np.asarray(states), np.asarray(actions), dataset_path)
    write_manifest(ckpt.obs_dim, ckpt.action_dim, env.action_low,
                   env.action_high, episodes, manifest_path)
    return dataset_path, manifest_path

"""Environments the bridge can serve or record from.

"demo:<dims>" is a self-contained integrator for tests and for smoke
runs on machines without gymnasium; anything else is treated as a
gymnasium id and created through that library.
"""

from __future__ import annotations

import numpy as np

from .errors import BridgeError

DEMO_MAX_STEPS = 200


class DemoIntegrator:
    """x' = clip(x + 0.1 a) on [-1, 1]^d, reward -||x'||^2."""

    def __init__(self, dims: int = 2, max_steps: int = DEMO_MAX_STEPS):
        if dims < 1:
            raise BridgeError("demo env needs at least one dimension")
        self.obs_dim = dims
        self.action_dim = dims
        self.action_low = -np.ones(dims)
        self.action_high = np.ones(dims)
        self.max_steps = max_steps
        self._x = None
        self._steps = 0

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._x = rng.uniform(-1.0, 1.0, self.obs_dim)
        self._steps = 0
        return self._x.copy()

    def step(self, action):
        if self._x is None:
            raise BridgeError("step before reset")
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        self._x = np.clip(self._x + 0.1 * a, -1.0, 1.0)
        self._steps += 1
        reward = -float(self._x @ self._x)
        return self._x.copy(), reward, False, self._steps >= self.max_steps

    def close(self):
        pass


class GymAdapter:
    """Uniform reset/step facade over a gymnasium environment."""

    def __init__(self, env_id: str):
        try:
            import gymnasium
        except ImportError:
            raise BridgeError(
                f"cannot create {env_id!r}: gymnasium is not installed "
                "(only demo:<dims> environments are available)") from None
        try:
            self._env = gymnasium.make(env_id)
        except Exception as exc:
            raise BridgeError(f"cannot create {env_id!r}: {exc}") from None
        obs_space, act_space = self._env.observation_space, self._env.action_space
        if len(obs_space.shape) != 1 or len(act_space.shape) != 1:
            raise BridgeError(f"{env_id!r} is not a flat continuous-control task")
        self.obs_dim = int(obs_space.shape[0])
        self.action_dim = int(act_space.shape[0])
        self.action_low = np.asarray(act_space.low, dtype=np.float64)
        self.action_high = np.asarray(act_space.high, dtype=np.float64)
        limit = getattr(self._env.spec, "max_episode_steps", None)
        self.max_steps = int(limit) if limit else 1000

    def reset(self, seed: int) -> np.ndarray:
        obs, _ = self._env.reset(seed=int(seed))
        return np.asarray(obs, dtype=np.float64)

    def step(self, action):
        a = np.clip(np.asarray(action), self.action_low, self.action_high)
        obs, reward, terminated, truncated, _ = self._env.step(
            a.astype(np.float32))
        return (np.asarray(obs, dtype=np.float64), float(reward),
                bool(terminated), bool(truncated))

    def close(self):
        self._env.close()


def make_bridge_env(env_id: str):
    if env_id.startswith("demo:"):
        try:
            dims = int(env_id.split(":", 1)[1])
        except ValueError:
            raise BridgeError(f"bad demo dims in {env_id!r}") from None
        return DemoIntegrator(dims=dims)
    return GymAdapter(env_id)

"""Minimal TD3 trainer used to produce demo checkpoints.

Convenience scaffolding, not a supported surface: the exporter and
server do not depend on it, and nothing here is covered by the test
suite. Module naming inside the policy mirrors the checkpoint layout
(actor.mu.*, critic.qf0.*, critic.qf1.*) so a saved state dict loads
straight back through the checkpoint reader.
"""

from __future__ import annotations

import numpy as np

from .envs import make_bridge_env


def _mlp(sizes, head):
    import torch.nn as nn

    layers = []
    for i in range(len(sizes) - 2):
        layers += [nn.Linear(sizes[i], sizes[i + 1]), nn.ReLU()]
    layers.append(nn.Linear(sizes[-2], sizes[-1]))
    if head == "tanh":
        layers.append(nn.Tanh())
    return nn.Sequential(*layers)


def _build_policy(obs_dim, act_dim, hidden):
    import torch.nn as nn

    class Actor(nn.Module):
        def __init__(self):
            super().__init__()
            self.mu = _mlp([obs_dim, *hidden, act_dim], "tanh")

    class Critic(nn.Module):
        def __init__(self):
            super().__init__()
            self.qf0 = _mlp([obs_dim + act_dim, *hidden, 1], "linear")
            self.qf1 = _mlp([obs_dim + act_dim, *hidden, 1], "linear")

    class Policy(nn.Module):
        def __init__(self):
            super().__init__()
            self.actor = Actor()
            self.critic = Critic()

    return Policy()


def evaluate(policy, env, episodes, base_seed, high):
    import torch

    total = 0.0
    for e in range(episodes):
        obs = env.reset(base_seed + e)
        while True:
            with torch.no_grad():
                a = policy.actor.mu(torch.as_tensor(obs, dtype=torch.float32))
            obs, r, term, trunc = env.step(a.numpy() * high)
            total += r
            if term or trunc:
                break
    return total / episodes


def train(env_id: str, steps: int, seed: int, out_path,
          hidden=(64, 48), log_every: int = 5000):
    """Train TD3 and save a checkpoint dict the exporter understands."""
    import torch

    env = make_bridge_env(env_id)
    obs_dim, act_dim = env.obs_dim, env.action_dim
    high = env.action_high
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    policy = _build_policy(obs_dim, act_dim, hidden)
    target = _build_policy(obs_dim, act_dim, hidden)
    target.load_state_dict(policy.state_dict())
    opt_actor = torch.optim.Adam(policy.actor.parameters(), lr=1e-3)
    opt_critic = torch.optim.Adam(policy.critic.parameters(), lr=1e-3)

    cap = 100_000
    buf = {
        "s": np.zeros((cap, obs_dim), np.float32),
        "a": np.zeros((cap, act_dim), np.float32),
        "r": np.zeros(cap, np.float32),
        "s2": np.zeros((cap, obs_dim), np.float32),
        "done": np.zeros(cap, np.float32),
    }
    size, head = 0, 0

    gamma, tau, batch = 0.99, 0.005, 256
    warmup, expl_noise, target_noise, noise_clip, delay = 1000, 0.1, 0.2, 0.5, 2

    obs = env.reset(seed)
    episode = 0
    for t in range(steps):
        if t < warmup:
            a = rng.uniform(-1.0, 1.0, act_dim)
        else:
            with torch.no_grad():
                a = policy.actor.mu(torch.as_tensor(obs, dtype=torch.float32)).numpy()
            a = np.clip(a + rng.normal(0.0, expl_noise, act_dim), -1.0, 1.0)
        obs2, r, term, trunc = env.step(a * high)
        buf["s"][head], buf["a"][head] = obs, a
        buf["r"][head], buf["s2"][head] = r, obs2
        buf["done"][head] = float(term)
        head = (head + 1) % cap
        size = min(size + 1, cap)
        obs = obs2
        if term or trunc:
            episode += 1
            obs = env.reset(seed + episode)

        if t < warmup or size < batch:
            continue
        idx = rng.integers(0, size, batch)
        s = torch.as_tensor(buf["s"][idx])
        a_t = torch.as_tensor(buf["a"][idx])
        r_t = torch.as_tensor(buf["r"][idx]).unsqueeze(1)
        s2 = torch.as_tensor(buf["s2"][idx])
        done = torch.as_tensor(buf["done"][idx]).unsqueeze(1)

        with torch.no_grad():
            noise = torch.clamp(torch.randn_like(a_t) * target_noise,
                                -noise_clip, noise_clip)
            a2 = torch.clamp(target.actor.mu(s2) + noise, -1.0, 1.0)
            q_in = torch.cat([s2, a2], dim=1)
            q_next = torch.min(target.critic.qf0(q_in), target.critic.qf1(q_in))
            backup = r_t + gamma * (1.0 - done) * q_next
        q_in = torch.cat([s, a_t], dim=1)
        loss_c = ((policy.critic.qf0(q_in) - backup) ** 2).mean() + \
                 ((policy.critic.qf1(q_in) - backup) ** 2).mean()
        opt_critic.zero_grad()
        loss_c.backward()
        opt_critic.step()

        if t % delay == 0:
            q_pi = policy.critic.qf0(torch.cat([s, policy.actor.mu(s)], dim=1))
            loss_a = -q_pi.mean()
            opt_actor.zero_grad()
            loss_a.backward()
            opt_actor.step()
            with torch.no_grad():
                for p, tp in zip(policy.parameters(), target.parameters()):
                    tp.mul_(1.0 - tau).add_(tau * p)

        if log_every and (t + 1) % log_every == 0:
            score = evaluate(policy, env, 5, 10_000, high)
            print(f"step {t + 1}: eval return {score:.2f}", flush=True)

    final = evaluate(policy, env, 20, 20_000, high)
    print(f"final eval return over 20 episodes: {final:.2f}", flush=True)
    torch.save({
        "format": "td3-checkpoint-v1",
        "state_dict": policy.state_dict(),
        "action_low": (-high).tolist(),
        "action_high": high.tolist(),
        "env_id": env_id,
        "eval_return": float(final),
    }, out_path)
    env.close()
    return final

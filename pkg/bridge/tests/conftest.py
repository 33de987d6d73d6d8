import numpy as np
import pytest
import torch

from policybridge.train import _build_policy


def build_checkpoint_file(path, obs_dim=2, act_dim=2, hidden=(8, 6),
                          high=1.0, torch_seed=3, env_id="demo:2",
                          extra=None):
    """Save an untrained checkpoint with the expected key layout."""
    torch.manual_seed(torch_seed)
    policy = _build_policy(obs_dim, act_dim, hidden)
    doc = {
        "state_dict": policy.state_dict(),
        "action_low": [-high] * act_dim,
        "action_high": [high] * act_dim,
        "env_id": env_id,
    }
    if extra:
        doc.update(extra)
    torch.save(doc, path)
    return path


@pytest.fixture(scope="session")
def checkpoint_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "agent.pt"
    return build_checkpoint_file(path)


@pytest.fixture
def rng():
    return np.random.default_rng(0)

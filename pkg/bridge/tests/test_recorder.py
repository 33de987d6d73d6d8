import numpy as np
import pytest

import policychain
from conftest import build_checkpoint_file
from policybridge import BridgeError, actor_forward, load_checkpoint, record_dataset


@pytest.fixture(scope="module")
def recording(tmp_path_factory, checkpoint_path):
    out = tmp_path_factory.mktemp("rec")
    dataset_path, manifest_path = record_dataset(
        checkpoint_path, "demo:2", episodes=2, seed=0, out_dir=out)
    return dataset_path, manifest_path


def test_row_count_and_manifest(recording):
    dataset_path, manifest_path = recording
    man = policychain.load_manifest(manifest_path)
    assert man.state_dim == 2 and man.action_dim == 2
    assert man.episode_count == 2
    np.testing.assert_array_equal(man.action_low, [-1.0, -1.0])
    ds = policychain.load_dataset(dataset_path, manifest_path)
    # demo episodes truncate at 200 steps, so 2 episodes = 400 rows
    assert ds.states.shape == (400, 2)
    assert ds.actions.shape == (400, 2)


def test_actions_are_the_actor_outputs(recording, checkpoint_path):
    dataset_path, manifest_path = recording
    ds = policychain.load_dataset(dataset_path, manifest_path)
    ck = load_checkpoint(checkpoint_path)
    # replay row by row, the way the recorder computed them; %.17g makes
    # the round trip lossless so equality is exact
    replayed = np.vstack([actor_forward(ck, s) for s in ds.states])
    np.testing.assert_array_equal(np.clip(replayed, -1.0, 1.0), ds.actions)


def test_same_seed_identical_bytes(tmp_path, checkpoint_path):
    d1, m1 = record_dataset(checkpoint_path, "demo:2", 1, 5, tmp_path / "a")
    d2, m2 = record_dataset(checkpoint_path, "demo:2", 1, 5, tmp_path / "b")
    assert d1.read_bytes() == d2.read_bytes()
    assert m1.read_bytes() == m2.read_bytes()


def test_different_seed_different_states(tmp_path, checkpoint_path):
    d1, m1 = record_dataset(checkpoint_path, "demo:2", 1, 5, tmp_path / "a")
    d2, m2 = record_dataset(checkpoint_path, "demo:2", 1, 6, tmp_path / "b")
    assert d1.read_bytes() != d2.read_bytes()


def test_dims_must_match_env(tmp_path):
    path = build_checkpoint_file(tmp_path / "n3.pt", obs_dim=3, act_dim=3,
                                 env_id="demo:3")
    with pytest.raises(BridgeError, match="dims"):
        record_dataset(path, "demo:2", 1, 0, tmp_path / "out")


def test_episode_floor(tmp_path, checkpoint_path):
    with pytest.raises(BridgeError, match="episode"):
        record_dataset(checkpoint_path, "demo:2", 0, 0, tmp_path / "out")


def test_recorded_dataset_distills(recording):
    dataset_path, manifest_path = recording
    ds = policychain.load_dataset(dataset_path, manifest_path)
    pol = policychain.fit_subpolicy(ds.states, ds.actions, 1e-6,
                                    (ds.action_low, ds.action_high))
    acts = policychain.predict_actions(pol, ds.states)
    assert np.isfinite(acts).all()

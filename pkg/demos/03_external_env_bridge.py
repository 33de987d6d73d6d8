"""Distill a real neural policy served over the line protocol.

The companion policybridge package turns a torch TD3 checkpoint into
plain JSON weight docs plus recorded datasets, and serves its
environment as a child process speaking one JSON line per request.
This demo runs that loop end to end against the committed demo
checkpoint: export, record, label with the exported critic, distill,
then fly both the neural teacher and the distilled chain through the
bridge and compare.

Run from the repository root (needs the bridge package installed):

    pip install -e bridge && python3 demos/03_external_env_bridge.py
"""

import sys
import tempfile
from pathlib import Path

try:
    import policybridge
except ImportError:
    sys.exit("the policybridge companion package is not installed; "
             "run: pip install -e bridge")

from policychain import (
    BridgeEnv,
    CriticOracle,
    DistillConfig,
    distill,
    fidelity,
    forward,
    load_dataset,
    load_network,
    rollout,
)

CKPT = Path(__file__).resolve().parents[1] / "bridge" / "checkpoints" / "demo_td3.pt"
SERVE = [sys.executable, "-m", "policybridge", "serve", "--env", "demo:2"]

print("=== 1. export the checkpoint to plain JSON ===")
work = Path(tempfile.mkdtemp(prefix="bridge_demo_"))
bundle = policybridge.export_checkpoint(CKPT, work / "export")
actor = load_network(bundle.actor_path)
critic = load_network(bundle.critic_paths[0])
shapes = " -> ".join(str(layer.w.shape[1]) for layer in actor.layers)
print(f"actor: {shapes} -> {actor.layers[-1].w.shape[0]}, "
      f"weights now live in {bundle.actor_path.name}\n")

print("=== 2. record the teacher's behavior ===")
data_path, man_path = policybridge.record_dataset(CKPT, "demo:2", episodes=50,
                                                  seed=0, out_dir=work / "rec")
dataset = load_dataset(data_path, man_path)
print(f"{dataset.states.shape[0]} rows from 50 episodes\n")

print("=== 3. distill with the exported critic as the judge ===")
oracle = CriticOracle(q1=critic, actor=actor)
cfg = DistillConfig(value_threshold=1.0, n_iteration=6, min_region_size=64,
                    ridge_lambda=1e-6, svm_c=10.0, svm_epochs=300, seed=0)
policy = distill(dataset, oracle, cfg)
fid = fidelity(policy, dataset)
print(f"{policy.n_nodes} linear nodes, open-loop action mse {fid.global_mse:.5f}\n")

print("=== 4. fly both through the bridge ===")
with BridgeEnv(SERVE) as env:
    teacher_total = 0.0
    for e in range(20):
        obs = env.reset(seed=5000 + e)
        while True:
            res = env.step(forward(actor, obs))
            obs = res.observation
            teacher_total += res.reward
            if res.terminated or res.truncated:
                break
print(f"neural teacher:   mean return {teacher_total / 20:8.3f}")

with BridgeEnv(SERVE) as env:
    report = rollout(env, policy, episodes=20, base_seed=5000)
print(f"distilled chain:  mean return {report.mean:8.3f} "
      f"(+/- {report.std:.3f})")
print(f"steps served per node: {dict(sorted(report.node_usage.items()))}")

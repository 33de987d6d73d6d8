"""Walk the whole pipeline on a synthetic bench.

A piecewise-linear teacher with three regions acts as the black box.
We record its decisions, distill the recording into a chain of gated
linear subpolicies, then check the result three ways: closed-loop
return, open-loop action fidelity, and a human read of the printed
coefficients.

Run from the repository root:

    python3 demos/01_distill_synthetic.py
"""

from policychain import (
    DistillConfig,
    PiecewiseLinearEnv,
    distill,
    fidelity,
    inspect_policy,
    make_piecewise_env,
    record_dataset,
    rollout,
)

print("=== 1. a black-box teacher ===")
env, teacher, critic, _ = make_piecewise_env(regions=3, dims=4, seed=1,
                                             behavior_noise=0.15)
d_s = teacher.maps[0].W.shape[1]
print(f"teacher: {teacher.n_regions} hidden linear maps over a {d_s}-d state")
print("the learner only sees states and the actions taken in them\n")

print("=== 2. record its decisions ===")
recorder = PiecewiseLinearEnv(teacher, max_steps=1)
dataset, manifest = record_dataset(recorder, teacher.predict,
                                   episodes=8000, base_seed=1001)
print(f"logged {dataset.states.shape[0]} state-action rows "
      f"({manifest.episode_count} episodes)\n")

print("=== 3. distill into a chain of linear subpolicies ===")
cfg = DistillConfig(value_threshold=1.0, n_iteration=6, min_region_size=64,
                    ridge_lambda=1e-6, svm_c=10.0, svm_epochs=300, seed=0)
policy = distill(dataset, critic, cfg)
print(f"distilled {policy.n_nodes} nodes (budget was {cfg.n_iteration})\n")

print("=== 4. closed-loop: does it still fly? ===")
report = rollout(env, policy, episodes=50, base_seed=9000)
print(f"mean return {report.mean:.2f} +/- {report.std:.2f} "
      f"(perfect play scores 200.0)")
print(f"steps served per node: {dict(sorted(report.node_usage.items()))}\n")

print("=== 5. open-loop: does it match the recording? ===")
fid = fidelity(policy, dataset)
print(f"mean squared action error {fid.global_mse:.5f}")
for node, mse in sorted(fid.per_node_mse.items()):
    print(f"  node {node}: mse {mse:.5f} over {fid.per_node_count[node]} rows")

print("\n=== 6. read the policy like a memo ===")
print(inspect_policy(policy))

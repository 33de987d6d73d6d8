"""Command-line driver: synth, distill, eval, inspect, boundary, replicate.

Exit codes: 0 success, 2 bad input (missing/malformed files, bad flags,
bridge protocol breaches), 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import (
    InputError,
    NumericError,
    load_dataset,
    load_manifest,
    read_json,
    save_dataset,
    save_manifest,
    write_json,
)
from .distill import DistillConfig, distill, inspect_policy, load_policy, save_policy
from .envs import (
    PiecewiseLinearEnv,
    make_env,
    make_piecewise_env,
    piecewise_from_descriptor,
    record_dataset,
)
from .evaluation import (
    make_report,
    boundary_grid,
    rollout,
    save_episode_table,
    save_grid,
    save_report,
)
from .nn import CriticOracle, load_network

CONFIG_KEYS = {
    "tau": 1.0,
    "iterations": 8,
    "min_region_size": 16,
    "ridge_lambda": 1e-6,
    "svm_c": 10.0,
    "svm_epochs": 300,
    "seed": 0,
    "critic_mode": "q1_only",
}


def _resolve_config(args) -> DistillConfig:
    """Flags beat the optional config document, which beats defaults."""
    doc = {}
    if args.config is not None:
        doc = read_json(args.config)
        unknown = set(doc) - set(CONFIG_KEYS)
        if unknown:
            raise InputError(
                f"unknown config keys in {args.config}: {', '.join(sorted(unknown))}"
            )
    merged = {}
    for key, default in CONFIG_KEYS.items():
        flag_value = getattr(args, key)
        if flag_value is not None:
            merged[key] = flag_value
        elif key in doc:
            merged[key] = doc[key]
        else:
            merged[key] = default
    return DistillConfig(
        value_threshold=float(merged["tau"]),
        n_iteration=int(merged["iterations"]),
        min_region_size=int(merged["min_region_size"]),
        ridge_lambda=float(merged["ridge_lambda"]),
        svm_c=float(merged["svm_c"]),
        svm_epochs=int(merged["svm_epochs"]),
        seed=int(merged["seed"]),
        critic_mode=str(merged["critic_mode"]),
    )


def _load_oracle(args, mode: str):
    doc = read_json(args.critic)
    if isinstance(doc, dict) and doc.get("kind") == "piecewise":
        if args.critic2 or args.actor:
            raise InputError("an analytic critic descriptor does not take --critic2/--actor")
        return piecewise_from_descriptor(args.critic)[2]
    q1 = load_network(args.critic)
    q2 = load_network(args.critic2) if args.critic2 else None
    actor = load_network(args.actor) if args.actor else None
    return CriticOracle(q1=q1, q2=q2, actor=actor, mode=mode)


def _add_distill_flags(p):
    p.add_argument("--dataset", required=True, help="recorded state-action csv")
    p.add_argument("--manifest", required=True, help="dataset manifest json")
    p.add_argument("--critic", required=True,
                   help="critic weight file or analytic descriptor json")
    p.add_argument("--critic2", help="optional twin critic weight file")
    p.add_argument("--actor", help="optional actor weight file for V(s)")
    p.add_argument("--config", help="optional json config; flags override it")
    p.add_argument("--tau", type=float, help="value threshold (default 1.0)")
    p.add_argument("--iterations", type=int, help="max chain length (default 8)")
    p.add_argument("--min-region-size", dest="min_region_size", type=int,
                   help="smallest region worth splitting (default 16)")
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float,
                   help="subpolicy ridge strength (default 1e-6)")
    p.add_argument("--svm-c", dest="svm_c", type=float,
                   help="gate hinge cost (default 10.0)")
    p.add_argument("--svm-epochs", dest="svm_epochs", type=int,
                   help="gate training epochs (default 300)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--critic-mode", dest="critic_mode",
                   choices=["q1_only", "min_twin"], help="twin handling")


def _distill_once(args, cfg):
    dataset = load_dataset(args.dataset, args.manifest)
    oracle = _load_oracle(args, cfg.critic_mode)
    return distill(dataset, oracle, cfg)


def cmd_distill(args) -> int:
    cfg = _resolve_config(args)
    policy = _distill_once(args, cfg)
    save_policy(policy, args.out)
    print(f"nodes={policy.n_nodes}")
    for node in policy.nodes:
        gate = "gated" if node.gate is not None else "terminal"
        print(f"node {node.index}: {gate} train_size={node.train_size} "
              f"positive_fraction={node.positive_fraction:.4f}")
    print(f"policy written to {args.out}")
    return 0


def _eval_parallel(policy, env_selector, episodes, base_seed, jobs):
    # one env per episode worker; seeds match the sequential schedule
    def one(e):
        env = make_env(env_selector)
        try:
            return rollout(env, policy, 1, base_seed + e)
        finally:
            env.close()

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(one, range(episodes)))
    returns = [p.episode_returns[0] for p in parts if p.episodes]
    usage = {}
    for p in parts:
        for k, v in p.node_usage.items():
            usage[k] = usage.get(k, 0) + v
    return make_report(returns, usage, policy.n_nodes,
                        all(p.valid for p in parts))


def cmd_eval(args) -> int:
    policy = load_policy(args.policy)
    if args.jobs <= 1:
        env = make_env(args.env)
        try:
            report = rollout(env, policy, args.episodes, args.base_seed)
        finally:
            env.close()
    else:
        report = _eval_parallel(policy, args.env, args.episodes, args.base_seed, args.jobs)
    if args.out_report:
        save_report(report, args.out_report)
    if args.out_episodes:
        save_episode_table(report, args.out_episodes)
    print(f"episodes={report.episodes} mean={report.mean:.4f} "
          f"std={report.std:.4f} valid={report.valid}")
    return 0 if report.valid else 3


def cmd_inspect(args) -> int:
    policy = load_policy(args.policy)
    fnames = anames = None
    if args.manifest:
        manifest = load_manifest(args.manifest)
        fnames = manifest.feature_names
        anames = manifest.action_names
    sys.stdout.write(inspect_policy(policy, feature_names=fnames, action_names=anames))
    return 0


def cmd_boundary(args) -> int:
    policy = load_policy(args.policy)
    table = boundary_grid(
        policy, args.dim_x, args.dim_y,
        (args.x_min, args.x_max), (args.y_min, args.y_max),
        args.resolution, fill_value=args.fill,
    )
    save_grid(table, args.out)
    print(f"grid written to {args.out} ({table.shape[0]} cells)")
    return 0


def cmd_synth(args) -> int:
    _, teacher, _, _ = make_piecewise_env(
        args.regions, args.dims, args.seed, behavior_noise=args.behavior_noise,
    )
    rec_env = PiecewiseLinearEnv(teacher, max_steps=args.horizon)
    dataset, manifest = record_dataset(
        rec_env, teacher.predict, episodes=args.episodes,
        base_seed=args.seed + 1000, noise_std=args.noise_std,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    data_path = os.path.join(args.out_dir, "dataset.csv")
    manifest_path = os.path.join(args.out_dir, "manifest.json")
    critic_path = os.path.join(args.out_dir, "critic.json")
    save_dataset(dataset, data_path)
    save_manifest(manifest, manifest_path)
    write_json({"kind": "piecewise", "regions": args.regions,
                "dims": args.dims, "seed": args.seed,
                "behavior_noise": args.behavior_noise}, critic_path)
    print(f"dataset rows={dataset.n_rows} -> {data_path}")
    print(f"manifest -> {manifest_path}")
    print(f"critic descriptor -> {critic_path}")
    return 0


def cmd_replicate(args) -> int:
    cfg = _resolve_config(args)
    os.makedirs(args.out_dir, exist_ok=True)

    def one(r):
        seed_r = cfg.seed + r
        rcfg = DistillConfig(
            value_threshold=cfg.value_threshold, n_iteration=cfg.n_iteration,
            min_region_size=cfg.min_region_size, ridge_lambda=cfg.ridge_lambda,
            svm_c=cfg.svm_c, svm_epochs=cfg.svm_epochs, seed=seed_r,
            critic_mode=cfg.critic_mode,
        )
        sub = os.path.join(args.out_dir, f"seed_{seed_r}")
        os.makedirs(sub, exist_ok=True)
        policy = _distill_once(args, rcfg)
        save_policy(policy, os.path.join(sub, "policy.json"))
        env = make_env(args.env)
        try:
            report = rollout(env, policy, args.episodes, args.base_seed + r)
        finally:
            env.close()
        save_report(report, os.path.join(sub, "report.json"))
        save_episode_table(report, os.path.join(sub, "episodes.csv"))
        return seed_r, policy.n_nodes, report

    rows = []
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(one, range(args.replicates)))
    else:
        rows = [one(r) for r in range(args.replicates)]
    means = [rep.mean for _, _, rep in rows]
    for seed_r, n_nodes, rep in rows:
        print(f"seed {seed_r}: nodes={n_nodes} mean={rep.mean:.4f} "
              f"std={rep.std:.4f} valid={rep.valid}")
    overall = float(np.mean(means)) if means else 0.0
    spread = float(np.std(means, ddof=1)) if len(means) > 1 else 0.0
    print(f"replicates={len(rows)} mean_of_means={overall:.4f} "
          f"std_of_means={spread:.4f}")
    return 0 if all(rep.valid for _, _, rep in rows) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="policychain",
        description="Distill a recorded control policy into a chain of "
                    "linear subpolicies gated by linear SVM splits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distill", help="fit a policy chain from a dataset")
    _add_distill_flags(p)
    p.add_argument("--out", required=True, help="policy output path")
    p.set_defaults(fn=cmd_distill)

    p = sub.add_parser("eval", help="roll a saved policy in an environment")
    p.add_argument("--policy", required=True)
    p.add_argument("--env", required=True,
                   help="builtin:pointmass:<dims> | builtin:piecewise:<descriptor> "
                        "| bridge:<command line>")
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--base-seed", dest="base_seed", type=int, default=0)
    p.add_argument("--out-report", dest="out_report", help="report json path")
    p.add_argument("--out-episodes", dest="out_episodes", help="episode csv path")
    p.add_argument("--jobs", type=int, default=1, help="parallel episode workers")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("inspect", help="print a policy's coefficients")
    p.add_argument("--policy", required=True)
    p.add_argument("--manifest", help="optional manifest for feature names")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("boundary", help="emit a 2-D node-assignment grid")
    p.add_argument("--policy", required=True)
    p.add_argument("--dim-x", dest="dim_x", type=int, required=True)
    p.add_argument("--dim-y", dest="dim_y", type=int, required=True)
    p.add_argument("--x-min", dest="x_min", type=float, default=-1.0)
    p.add_argument("--x-max", dest="x_max", type=float, default=1.0)
    p.add_argument("--y-min", dest="y_min", type=float, default=-1.0)
    p.add_argument("--y-max", dest="y_max", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--fill", type=float, default=0.0,
                   help="value for the non-slice state components")
    p.add_argument("--out", required=True, help="grid csv path")
    p.set_defaults(fn=cmd_boundary)

    p = sub.add_parser("synth", help="sample a synthetic bench and record a dataset")
    p.add_argument("--regions", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--episodes", type=int, default=20000)
    p.add_argument("--horizon", type=int, default=1,
                   help="recording episode length (short keeps state coverage broad)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", dest="noise_std", type=float, default=0.0,
                   help="jitter added to recorded actions")
    p.add_argument("--behavior-noise", dest="behavior_noise", type=float, default=0.15,
                   help="exploration scale the critic assumes for recorded behavior")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("replicate", help="independent distill+eval repetitions")
    _add_distill_flags(p)
    p.add_argument("--env", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--base-seed", dest="base_seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1, help="parallel replicate workers")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(fn=cmd_replicate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:  # ProtocolError included
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end: export, record, serve, train."""

from __future__ import annotations

import argparse
import sys

from .errors import BridgeError


def _add_export(sub):
    p = sub.add_parser("export", help="write actor/critic network docs and replay fixtures")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fixtures", type=int, default=128,
                   help="input/output pairs per fixture (min 100)")
    p.add_argument("--fixture-seed", type=int, default=0)


def _add_record(sub):
    p = sub.add_parser("record", help="roll out a checkpoint's actor and dump a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)


def _add_serve(sub):
    p = sub.add_parser("serve", help="expose an environment over stdio, one JSON per line")
    p.add_argument("--env", required=True)


def _add_train(sub):
    p = sub.add_parser("train", help="train a TD3 agent and save a checkpoint")
    p.add_argument("--env", required=True)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="policybridge",
        description="Bridge between torch policy checkpoints and the "
                    "policychain file formats and env protocol.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_export(sub)
    _add_record(sub)
    _add_serve(sub)
    _add_train(sub)
    args = parser.parse_args(argv)

    try:
        if args.command == "export":
            from .exporter import export_checkpoint
            bundle = export_checkpoint(args.checkpoint, args.out_dir,
                                       fixture_pairs=args.fixtures,
                                       fixture_seed=args.fixture_seed)
            print(f"actor: {bundle.actor_path}")
            for path in bundle.critic_paths:
                print(f"critic: {path}")
            for name, fdir in sorted(bundle.fixture_dirs.items()):
                print(f"fixture {name}: {fdir}")
        elif args.command == "record":
            from .recorder import record_dataset
            dataset_path, manifest_path = record_dataset(
                args.checkpoint, args.env, args.episodes, args.seed, args.out_dir)
            print(f"dataset: {dataset_path}")
            print(f"manifest: {manifest_path}")
        elif args.command == "serve":
            from .server import serve_env
            return serve_env(args.env)
        elif args.command == "train":
            from .train import train
            train(args.env, args.steps, args.seed, args.out)
            print(f"checkpoint: {args.out}")
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Converting a loaded checkpoint into weight documents and replay fixtures."""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint
from .errors import BridgeError
from .formats import write_network


@dataclass(frozen=True)
class ExportBundle:
    actor_path: Path
    critic_paths: tuple
    fixture_dirs: dict
    dataset_path: Path | None = None
    manifest_path: Path | None = None


def _doc_layers(stack, head: str):
    layers = [(w, b, "relu") for w, b in stack[:-1]]
    w, b = stack[-1]
    layers.append((w, b, head))
    return layers


def _reference_outputs(stack, X: np.ndarray, head: str, scale=None) -> np.ndarray:
    """Forward pass computed by torch on the exported float64 weights."""
    import torch

    h = torch.from_numpy(X)
    for w, b in stack[:-1]:
        h = torch.relu(torch.nn.functional.linear(
            h, torch.from_numpy(w), torch.from_numpy(b)))
    w, b = stack[-1]
    z = torch.nn.functional.linear(h, torch.from_numpy(w), torch.from_numpy(b))
    if head == "tanh":
        z = torch.tanh(z)
    if scale is not None:
        z = z * torch.from_numpy(np.asarray(scale, dtype=np.float64))
    return z.numpy()


def _write_pairs(directory: Path, X: np.ndarray, Y: np.ndarray) -> None:
    np.savetxt(directory / "inputs.csv", X, fmt="%.17g", delimiter=",")
    np.savetxt(directory / "outputs.csv", Y, fmt="%.17g", delimiter=",")


def export_checkpoint(checkpoint_path, out_dir, fixture_pairs: int = 128,
                      fixture_seed: int = 0) -> ExportBundle:
    """Write actor/critic weight documents plus input-output fixtures.

    Weights are widened to 64-bit before anything is computed or
    written, so the fixture outputs describe exactly the numbers in the
    documents and a reader replays them to rounding error.
    """
    if fixture_pairs < 100:
        raise BridgeError("at least 100 fixture pairs are required")
    ckpt = checkpoint_path
    if not isinstance(ckpt, Checkpoint):
        ckpt = load_checkpoint(checkpoint_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(fixture_seed)

    cases = [("actor", ckpt.actor, "tanh", "state", ckpt.action_high, ckpt.obs_dim)]
    for i, stack in enumerate(ckpt.critics):
        cases.append((f"critic{i + 1}", stack, "linear", "state_action",
                      None, ckpt.obs_dim + ckpt.action_dim))

    critic_paths, fixture_dirs = [], {}
    actor_path = None
    for name, stack, head, input_kind, scale, in_dim in cases:
        doc_path = out / f"{name}.json"
        write_network(_doc_layers(stack, head), input_kind, doc_path,
                      output_scale=scale)
        fix_dir = out / "fixtures" / name
        fix_dir.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(doc_path, fix_dir / "network.json")
        X = rng.uniform(-2.0, 2.0, size=(fixture_pairs, in_dim))
        _write_pairs(fix_dir, X, _reference_outputs(stack, X, head, scale))
        fixture_dirs[name] = fix_dir
        if name == "actor":
            actor_path = doc_path
        else:
            critic_paths.append(doc_path)

    return ExportBundle(actor_path=actor_path, critic_paths=tuple(critic_paths),
                        fixture_dirs=fixture_dirs)

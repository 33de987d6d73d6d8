"""Bridge between torch policy checkpoints and policy-chain tooling.

Three jobs: export a TD3-style checkpoint to plain-JSON network docs
with replay fixtures, record rollout datasets in the CSV/manifest
layout the distiller reads, and serve environments over a line-based
JSON protocol for remote evaluation.
"""

from .checkpoint import Checkpoint, actor_forward, load_checkpoint
from .envs import make_bridge_env
from .errors import BridgeError
from .exporter import ExportBundle, export_checkpoint
from .recorder import record_dataset
from .server import serve_env

__all__ = [
    "BridgeError",
    "Checkpoint",
    "ExportBundle",
    "actor_forward",
    "export_checkpoint",
    "load_checkpoint",
    "make_bridge_env",
    "record_dataset",
    "serve_env",
]

__version__ = "0.1.0"

"""Distill a recorded continuous-control policy into a chain of linear
subpolicies gated by linear SVM splits, then score the result by
deterministic rollout.
"""

from .core import (
    DatasetManifest,
    InputError,
    NumericError,
    RegionLabels,
    ToolkitError,
    TransitionDataset,
    load_dataset,
    load_manifest,
    make_dataset,
    save_dataset,
    save_manifest,
    solve_ridge,
)
from .distill import (
    DistillConfig,
    DistilledPolicy,
    PartitionNode,
    distill,
    inspect_policy,
    label_region,
    load_policy,
    route,
    route_batch,
    save_policy,
)
from .envs import (
    BridgeEnv,
    EnvSpec,
    PiecewiseCritic,
    PiecewiseLinearEnv,
    PiecewiseTeacher,
    PointMassEnv,
    ProtocolError,
    StepResult,
    make_env,
    make_piecewise_env,
    quadratic_critic_network,
    record_dataset,
)
from .evaluation import (
    EvalReport,
    FidelityReport,
    boundary_grid,
    fidelity,
    rollout,
    save_grid,
    save_report,
)
from .learners import (
    LinearSubpolicy,
    SvmGate,
    fit_subpolicy,
    fit_svm,
    gate_predict,
    predict_action,
    predict_actions,
)
from .nn import CriticOracle, MlpNetwork, forward, forward_batch, load_network, save_network

__version__ = "0.1.0"

__all__ = [
    "BridgeEnv",
    "CriticOracle",
    "DatasetManifest",
    "DistillConfig",
    "DistilledPolicy",
    "EnvSpec",
    "EvalReport",
    "FidelityReport",
    "InputError",
    "LinearSubpolicy",
    "MlpNetwork",
    "NumericError",
    "PartitionNode",
    "PiecewiseCritic",
    "PiecewiseLinearEnv",
    "PiecewiseTeacher",
    "PointMassEnv",
    "ProtocolError",
    "RegionLabels",
    "StepResult",
    "SvmGate",
    "ToolkitError",
    "TransitionDataset",
    "boundary_grid",
    "distill",
    "fidelity",
    "fit_subpolicy",
    "fit_svm",
    "forward",
    "forward_batch",
    "gate_predict",
    "inspect_policy",
    "label_region",
    "load_dataset",
    "load_manifest",
    "load_network",
    "load_policy",
    "make_dataset",
    "make_env",
    "make_piecewise_env",
    "predict_action",
    "predict_actions",
    "quadratic_critic_network",
    "record_dataset",
    "rollout",
    "route",
    "route_batch",
    "save_dataset",
    "save_grid",
    "save_manifest",
    "save_network",
    "save_policy",
    "save_report",
    "solve_ridge",
]

"""Domain types, dataset I/O, and the small dense ridge kernel.

Everything downstream works in float64. Files written here follow the
repo's precision contract: floats are printed with 17 significant
digits so that save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import json.encoder
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ToolkitError):
    """Bad file, malformed document, or dimension mismatch."""


class NumericError(ToolkitError):
    """Singular system or non-finite values where finite ones are required."""


# ---------------------------------------------------------------------------
# precision contract


def fmt_float(x: float) -> str:
    """Format a finite float with 17 significant digits.

    Zero (either sign) prints as "0" so that re-serialization after a
    round trip through a reader that drops the sign of -0.0 stays stable.
    """
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise NumericError("non-finite value in output document")
    if x == 0.0:
        return "0"
    return format(x, ".17g")


class _Float17Encoder(json.JSONEncoder):
    # Forces the pure-python encode path so float formatting is ours.
    def iterencode(self, o, _one_shot=False):
        return json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            json.encoder.encode_basestring_ascii,
            self.indent,
            fmt_float,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            False,
        )(o, 0)


def json_dumps(obj) -> str:
    """Serialize to JSON with the 17-significant-digit float contract."""
    return json.dumps(obj, cls=_Float17Encoder, indent=1) + "\n"


def write_json(obj, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json_dumps(obj))


def read_json(path: str | os.PathLike):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed document {path}: {exc}") from None


# ---------------------------------------------------------------------------
# domain types


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransitionDataset:
    """Recorded teacher states and actions, row-aligned.

    ``states`` is N x state_dim, ``actions`` N x action_dim. Actions are
    expected to lie inside [action_low, action_high]; ingestion clamps
    them before construction.
    """

    states: np.ndarray
    actions: np.ndarray
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen(self.states))
        object.__setattr__(self, "actions", _frozen(self.actions))
        object.__setattr__(self, "action_low", _frozen(self.action_low))
        object.__setattr__(self, "action_high", _frozen(self.action_high))
        if self.states.ndim != 2 or self.actions.ndim != 2:
            raise InputError("states and actions must be 2-D arrays")
        if self.states.shape[0] != self.actions.shape[0]:
            raise InputError(
                f"row count mismatch: {self.states.shape[0]} states vs "
                f"{self.actions.shape[0]} actions"
            )
        if self.states.shape[0] < 1:
            raise InputError("dataset has no rows")
        if self.states.shape[1] != self.state_dim:
            raise InputError(
                f"state_dim {self.state_dim} does not match data width "
                f"{self.states.shape[1]}"
            )
        if self.actions.shape[1] != self.action_dim:
            raise InputError(
                f"action_dim {self.action_dim} does not match data width "
                f"{self.actions.shape[1]}"
            )
        if self.action_low.shape != (self.action_dim,) or self.action_high.shape != (
            self.action_dim,
        ):
            raise InputError("action bounds must have length action_dim")
        if not np.isfinite(self.states).all() or not np.isfinite(self.actions).all():
            raise NumericError("dataset contains non-finite values")
        if (self.actions < self.action_low).any() or (
            self.actions > self.action_high
        ).any():
            raise InputError("actions outside bounds; ingest via load_dataset/make_dataset")

    @property
    def n_rows(self) -> int:
        return self.states.shape[0]


def make_dataset(states, actions, action_low, action_high) -> TransitionDataset:
    """Build a dataset from arrays, clamping actions into bounds."""
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    low = np.asarray(action_low, dtype=np.float64)
    high = np.asarray(action_high, dtype=np.float64)
    if states.ndim != 2 or actions.ndim != 2:
        raise InputError("states and actions must be 2-D arrays")
    actions = np.clip(actions, low, high)
    return TransitionDataset(
        states=states,
        actions=actions,
        state_dim=states.shape[1],
        action_dim=actions.shape[1],
        action_low=low,
        action_high=high,
    )


@dataclass(frozen=True)
class RegionLabels:
    """Per-row binary labels for one partition region."""

    labels: np.ndarray
    positive_count: int
    nonfinite_count: int = 0

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int8)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if not np.isin(labels, (0, 1)).all():
            raise InputError("labels must be 0 or 1")
        if int(labels.sum()) != self.positive_count:
            raise InputError("positive_count inconsistent with labels")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class DatasetManifest:
    """Sidecar metadata describing one dataset file."""

    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    episode_count: int = 0
    feature_names: tuple[str, ...] | None = None
    action_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "action_low", _frozen(self.action_low))
        object.__setattr__(self, "action_high", _frozen(self.action_high))
        if self.state_dim < 1 or self.action_dim < 1:
            raise InputError("dimensions must be positive")
        if self.action_low.shape != (self.action_dim,) or self.action_high.shape != (
            self.action_dim,
        ):
            raise InputError("action bounds must have length action_dim")
        if self.episode_count < 0:
            raise InputError("episode_count must be >= 0")
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
            if len(self.feature_names) != self.state_dim:
                raise InputError("feature_names length must equal state_dim")
        if self.action_names is not None:
            object.__setattr__(self, "action_names", tuple(self.action_names))
            if len(self.action_names) != self.action_dim:
                raise InputError("action_names length must equal action_dim")


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "state_dim": manifest.state_dim,
        "action_dim": manifest.action_dim,
        "action_low": list(manifest.action_low),
        "action_high": list(manifest.action_high),
        "episode_count": manifest.episode_count,
    }
    if manifest.feature_names is not None:
        doc["feature_names"] = list(manifest.feature_names)
    if manifest.action_names is not None:
        doc["action_names"] = list(manifest.action_names)
    write_json(doc, path)


def load_manifest(path) -> DatasetManifest:
    doc = read_json(path)
    try:
        return DatasetManifest(
            state_dim=int(doc["state_dim"]),
            action_dim=int(doc["action_dim"]),
            action_low=np.asarray(doc["action_low"], dtype=np.float64),
            action_high=np.asarray(doc["action_high"], dtype=np.float64),
            episode_count=int(doc.get("episode_count", 0)),
            feature_names=doc.get("feature_names"),
            action_names=doc.get("action_names"),
        )
    except KeyError as exc:
        raise InputError(f"manifest {path} missing key {exc}") from None


# ---------------------------------------------------------------------------
# dataset file I/O


def dataset_header(state_dim: int, action_dim: int) -> str:
    cols = [f"s{i}" for i in range(state_dim)] + [f"a{j}" for j in range(action_dim)]
    return ",".join(cols)


def load_dataset(data_path, manifest_path) -> TransitionDataset:
    """Read a recorded state-action table plus its manifest.

    The table is comma-separated with a ``s0..s{d_s-1},a0..a{d_a-1}``
    header. Actions are clamped into the manifest bounds; row order is
    preserved.
    """
    manifest = load_manifest(manifest_path)
    expected = dataset_header(manifest.state_dim, manifest.action_dim)
    try:
        with open(data_path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != expected:
                raise InputError(
                    f"{data_path}: header {header!r} does not match manifest "
                    f"dims (expected {expected!r})"
                )
            try:
                table = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
            except ValueError:
                fh.seek(0)
                fh.readline()
                for lineno, line in enumerate(fh, start=2):
                    cells = line.strip().split(",")
                    for cell in cells:
                        try:
                            float(cell)
                        except ValueError:
                            raise InputError(
                                f"{data_path}:{lineno}: non-numeric cell {cell!r}"
                            ) from None
                raise InputError(f"{data_path}: malformed table") from None
    except FileNotFoundError:
        raise InputError(f"file not found: {data_path}") from None
    if table.size == 0:
        raise InputError(f"{data_path}: no data rows")
    width = manifest.state_dim + manifest.action_dim
    if table.shape[1] != width:
        raise InputError(
            f"{data_path}: rows have {table.shape[1]} columns, expected {width}"
        )
    bad = ~np.isfinite(table).all(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0]) + 2  # 1-based, after header
        raise InputError(f"{data_path}:{row}: non-finite value")
    return make_dataset(
        table[:, : manifest.state_dim],
        table[:, manifest.state_dim :],
        manifest.action_low,
        manifest.action_high,
    )


def save_dataset(dataset: TransitionDataset, path) -> None:
    header = dataset_header(dataset.state_dim, dataset.action_dim)
    table = np.hstack([dataset.states, dataset.actions])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")


# ---------------------------------------------------------------------------
# ridge kernel


def solve_ridge(
    X: np.ndarray,
    Y: np.ndarray,
    lam: float,
    penalize: np.ndarray | None = None,
) -> np.ndarray:
    """Solve min_W ||X W - Y||^2 + lam * ||W||^2 by normal equations.

    ``penalize`` is an optional boolean mask over columns of X; columns
    with a False entry (e.g. an appended intercept column) are excluded
    from the L2 penalty. The system is factorized with a symmetric
    positive-definite Cholesky solve; dimensions here are tiny.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2:
        raise InputError("X must be 2-D")
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if Y.shape[0] != X.shape[0]:
        raise InputError("X and Y row counts differ")
    if lam < 0:
        raise InputError("lambda must be >= 0")
    p = X.shape[1]
    G = X.T @ X
    if lam > 0:
        diag = np.ones(p) if penalize is None else np.asarray(penalize, dtype=np.float64)
        G = G + lam * np.diag(diag)
    rhs = X.T @ Y
    try:
        c, low = scipy.linalg.cho_factor(G)
        W = scipy.linalg.cho_solve((c, low), rhs)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        raise NumericError(
            f"singular normal equations (lambda={lam}); use lambda > 0"
        ) from None
    return W[:, 0] if squeeze else W

"""Model classes fitted during distillation.

Two small learners: affine state-to-action subpolicies (ridge least
squares) and binary linear SVM gates (primal subgradient, hinge loss).
Both are plain numpy and deterministic under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .core import InputError, RegionLabels, solve_ridge

SVM_BATCH = 256  # mini-batch rows per subgradient step


@dataclass(frozen=True)
class LinearSubpolicy:
    """Affine map state -> action, clamped into the action bounds.

    Coefficients double as feature importances: W[i, j] is the weight of
    state feature j on action unit i.
    """

    W: np.ndarray  # d_a x d_s
    b: np.ndarray  # d_a
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        for name in ("W", "b", "action_low", "action_high"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise InputError("subpolicy W and b shapes inconsistent")
        if self.action_low.shape != self.b.shape or self.action_high.shape != self.b.shape:
            raise InputError("subpolicy bounds must have one entry per action unit")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise InputError("subpolicy coefficients must be finite")

    @property
    def state_dim(self) -> int:
        return self.W.shape[1]

    @property
    def action_dim(self) -> int:
        return self.W.shape[0]


def fit_subpolicy(states, actions, ridge_lambda: float, bounds) -> LinearSubpolicy:
    """Ridge least-squares fit of actions on states, intercept unpenalized."""
    S = np.asarray(states, dtype=np.float64)
    A = np.asarray(actions, dtype=np.float64)
    if S.ndim != 2 or A.ndim != 2 or S.shape[0] != A.shape[0]:
        raise InputError("states and actions must be matrices with equal row counts")
    if S.shape[0] < 1:
        raise InputError("cannot fit a subpolicy on an empty region")
    low, high = (np.asarray(v, dtype=np.float64) for v in bounds)
    X = np.hstack([S, np.ones((S.shape[0], 1))])
    penalize = np.ones(X.shape[1], dtype=bool)
    penalize[-1] = False  # intercept column stays unpenalized
    coef = solve_ridge(X, A, ridge_lambda, penalize=penalize)
    coef = np.atleast_2d(coef)
    return LinearSubpolicy(W=coef[:-1].T, b=coef[-1], action_low=low, action_high=high)


def predict_action(p: LinearSubpolicy, s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (p.state_dim,):
        raise InputError(f"state length {s.shape} does not match subpolicy input {p.state_dim}")
    return np.clip(p.W @ s + p.b, p.action_low, p.action_high)


def predict_actions(p: LinearSubpolicy, S) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != p.state_dim:
        raise InputError(f"state matrix width does not match subpolicy input {p.state_dim}")
    return np.clip(S @ p.W.T + p.b, p.action_low, p.action_high)


@dataclass(frozen=True)
class SvmGate:
    """Linear halfspace gate on standardized features.

    predict is 1 iff w . (s - mean) / scale + b > 0; an exact zero
    resolves to 0 so ambiguous states descend to deeper nodes.
    """

    w: np.ndarray  # d_s
    b: float
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        for name in ("w", "mean", "scale"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b", float(self.b))
        if self.w.ndim != 1 or self.mean.shape != self.w.shape or self.scale.shape != self.w.shape:
            raise InputError("gate coefficient and standardizer lengths differ")
        if not (self.scale > 0).all():
            raise InputError("gate standardizer scales must be strictly positive")
        ok = np.isfinite(self.w).all() and np.isfinite(self.mean).all()
        if not (ok and np.isfinite(self.scale).all() and np.isfinite(self.b)):
            raise InputError("gate parameters must be finite")

    def decision_value(self, s) -> float:
        s = np.asarray(s, dtype=np.float64)
        return float(self.w @ ((s - self.mean) / self.scale) + self.b)

    def decision_values(self, S) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        return ((S - self.mean) / self.scale) @ self.w + self.b


def gate_predict(g: SvmGate, s) -> int:
    return int(g.decision_value(s) > 0.0)


def gate_predict_batch(g: SvmGate, S) -> np.ndarray:
    return (g.decision_values(S) > 0.0).astype(np.int8)


def svm_objective(w, b, X, y, c: float) -> float:
    """Primal soft-margin objective 0.5*||w||^2 + c * sum hinge."""
    margins = y * (X @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(0.0, 1.0 - margins).sum())


def fit_svm(states, labels, c: float, epochs: int, seed: int) -> SvmGate:
    """Fit a soft-margin linear gate by a seeded primal subgradient schedule.

    Minimizes 0.5*||w||^2 + c * sum_i hinge(y_i (w.x_i + b)) on
    standardized features, y in {-1, +1} mapped from the 0/1 labels.
    Scaling by 1/(c N) gives the pegasos objective with lam = 1/(c N);
    steps use eta_t = 1/(lam t) for w (with the norm projection) and
    1/t for the unregularized bias. The returned coefficients are the
    average over the second half of the schedule, which damps the
    oscillation of the final iterates around the optimum.
    """
    if isinstance(labels, RegionLabels):
        lab = labels.labels
    else:
        lab = np.asarray(labels)
    X = np.asarray(states, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != lab.shape[0]:
        raise InputError("states and labels must have equal row counts")
    if c <= 0:
        raise InputError("svm cost c must be positive")
    if epochs < 1:
        raise InputError("epochs must be >= 1")
    n = X.shape[0]
    pos = int((lab == 1).sum())
    if pos == 0 or pos == n:
        raise InputError("fit_svm needs both label classes present")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0  # constant feature carries no signal; leave it centered
    Z = (X - mean) / std
    y = np.where(lab == 1, 1.0, -1.0)

    lam = 1.0 / (c * n)
    radius = 1.0 / sqrt(lam)
    batch = min(SVM_BATCH, n)
    rng = np.random.default_rng(seed)

    w = np.zeros(X.shape[1])
    b = 0.0
    total_steps = epochs * ((n + batch - 1) // batch)
    avg_from = total_steps // 2 + 1
    w_sum = np.zeros_like(w)
    b_sum = 0.0
    n_avg = 0
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            t += 1
            rows = order[start:start + batch]
            Zb, yb = Z[rows], y[rows]
            viol = yb * (Zb @ w + b) < 1.0
            k = rows.shape[0]
            eta = 1.0 / (lam * t)
            w = (1.0 - eta * lam) * w + (eta / k) * (yb[viol, None] * Zb[viol]).sum(axis=0)
            wnorm = float(np.linalg.norm(w))
            if wnorm > radius:
                w *= radius / wnorm
            b += (1.0 / t) * float(yb[viol].sum()) / k
            if t >= avg_from:
                w_sum += w
                b_sum += b
                n_avg += 1
    return SvmGate(w=w_sum / n_avg, b=b_sum / n_avg, mean=mean, scale=std)

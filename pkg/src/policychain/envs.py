"""Rollout environments: built-in synthetic benches and a line-protocol
client for external environments served by a child process.

The synthetic piecewise bench carries its own ground truth (teacher
maps, region halfspaces, an exact critic), so distillation quality can
be scored in closed form without any external framework.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

from .core import InputError, NumericError, read_json
from .learners import LinearSubpolicy, SvmGate, predict_action, predict_actions
from .nn import Layer, MlpNetwork

POINT_MASS_GAIN = 0.1
DEFAULT_MAX_STEPS = 200


class ProtocolError(InputError):
    """A bridge child broke the one-request/one-response line framing."""


@dataclass(frozen=True)
class EnvSpec:
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_steps: int
    kind: str

    def __post_init__(self):
        for name in ("action_low", "action_high"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.state_dim < 1 or self.action_dim < 1:
            raise InputError("environment dims must be positive")
        if self.max_steps < 1:
            raise InputError("max_steps must be >= 1")
        if self.action_low.shape != (self.action_dim,) or self.action_high.shape != (self.action_dim,):
            raise InputError("bounds length must match action_dim")


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    def __post_init__(self):
        obs = np.ascontiguousarray(self.observation, dtype=np.float64)
        obs.setflags(write=False)
        object.__setattr__(self, "observation", obs)
        object.__setattr__(self, "reward", float(self.reward))
        if not np.isfinite(obs).all():
            raise NumericError("environment produced a non-finite observation")


class PointMassEnv:
    """Integrator on [-1, 1]^d: x' = clip(x + 0.1 a), reward -||x'||^2."""

    def __init__(self, dims: int = 1, max_steps: int = DEFAULT_MAX_STEPS):
        self._spec = EnvSpec(
            state_dim=dims, action_dim=dims,
            action_low=-np.ones(dims), action_high=np.ones(dims),
            max_steps=max_steps, kind="pointmass",
        )
        self._x = None
        self._steps = 0

    def spec(self) -> EnvSpec:
        return self._spec

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._x = rng.uniform(-1.0, 1.0, self._spec.state_dim)
        self._steps = 0
        return self._x.copy()

    def step(self, action) -> StepResult:
        if self._x is None:
            raise InputError("step before reset")
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        self._x = np.clip(self._x + POINT_MASS_GAIN * a, -1.0, 1.0)
        self._steps += 1
        return StepResult(
            observation=self._x.copy(),
            reward=-float(self._x @ self._x),
            terminated=False,
            truncated=self._steps >= self._spec.max_steps,
        )

    def close(self):
        pass


@dataclass(frozen=True)
class PiecewiseTeacher:
    """Ground-truth piecewise-linear policy over chained halfspace regions.

    A state belongs to the first region i whose halfspace test
    w_i . s + c_i <= 0 holds, falling through to the last map; this
    mirrors the serve-or-descend routing of a distilled chain.
    """

    maps: tuple[LinearSubpolicy, ...]
    halfspace_w: np.ndarray  # (K-1) x d_s
    halfspace_c: np.ndarray  # K-1

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        w = np.ascontiguousarray(self.halfspace_w, dtype=np.float64)
        c = np.ascontiguousarray(self.halfspace_c, dtype=np.float64)
        w.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "halfspace_w", w)
        object.__setattr__(self, "halfspace_c", c)
        if len(self.maps) != w.shape[0] + 1 or c.shape != (w.shape[0],):
            raise InputError("teacher needs K maps and K-1 halfspaces")

    @property
    def n_regions(self) -> int:
        return len(self.maps)

    def region(self, s) -> int:
        s = np.asarray(s, dtype=np.float64)
        for i in range(self.n_regions - 1):
            if float(self.halfspace_w[i] @ s + self.halfspace_c[i]) <= 0.0:
                return i
        return self.n_regions - 1

    def region_batch(self, S) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        if self.n_regions == 1:
            return np.zeros(S.shape[0], dtype=np.int64)
        inside = (S @ self.halfspace_w.T + self.halfspace_c) <= 0.0
        return np.where(inside.any(axis=1), inside.argmax(axis=1), self.n_regions - 1)

    def predict(self, s) -> np.ndarray:
        return predict_action(self.maps[self.region(s)], s)

    def predict_batch(self, S) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        out = np.empty((S.shape[0], self.maps[0].action_dim))
        regions = self.region_batch(S)
        for i, m in enumerate(self.maps):
            rows = np.flatnonzero(regions == i)
            if rows.shape[0]:
                out[rows] = predict_actions(m, S[rows])
        return out


class PiecewiseCritic:
    """Exact oracle for the piecewise bench: Q(s, a) = 1 - ||a - pi*(s)||^2.

    The state value plays the role a trained critic's value plays for a
    recorded agent: the worth of recorded behavior from s. When the
    recording carried Gaussian action jitter of scale behavior_noise,
    that worth is the closed-form expectation 1 - d_a * noise^2 (the
    jitter is what a real critic was trained under, even though each
    logged action is a single draw). With zero behavior noise there is
    nothing to average and V(s) is Q at the caller's fallback action,
    the recorded action for that state, so Q(s, pi*(s)) = V(s) = 1.
    """

    def __init__(self, teacher: PiecewiseTeacher, behavior_noise: float = 0.0):
        if behavior_noise < 0:
            raise InputError("behavior_noise must be >= 0")
        self.teacher = teacher
        self.behavior_noise = float(behavior_noise)

    def q_value(self, s, a) -> float:
        d = np.asarray(a, dtype=np.float64) - self.teacher.predict(s)
        return 1.0 - float(d @ d)

    def q_values(self, S, A) -> np.ndarray:
        d = np.asarray(A, dtype=np.float64) - self.teacher.predict_batch(S)
        return 1.0 - (d * d).sum(axis=1)

    def _mean_behavior_value(self) -> float:
        d_a = self.teacher.maps[0].action_dim
        return 1.0 - d_a * self.behavior_noise ** 2

    def state_value(self, s, fallback_action=None) -> float:
        if self.behavior_noise > 0:
            return self._mean_behavior_value()
        if fallback_action is None:
            raise InputError("analytic critic has no actor; a fallback action is required")
        return self.q_value(s, fallback_action)

    def state_values(self, S, FB=None) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        if self.behavior_noise > 0:
            return np.full(S.shape[0], self._mean_behavior_value())
        if FB is None:
            raise InputError("analytic critic has no actor; fallback actions are required")
        return self.q_values(S, FB)


class PiecewiseLinearEnv:
    """Point-mass dynamics scored against the teacher: r = 1 - ||a - pi*(s)||^2.

    The request box comes from the teacher's maps; the executed action
    saturates at the unit actuator range before scoring and dynamics.
    """

    def __init__(self, teacher: PiecewiseTeacher, max_steps: int = DEFAULT_MAX_STEPS):
        d = teacher.maps[0].state_dim
        self.teacher = teacher
        self._spec = EnvSpec(
            state_dim=d, action_dim=teacher.maps[0].action_dim,
            action_low=teacher.maps[0].action_low,
            action_high=teacher.maps[0].action_high,
            max_steps=max_steps, kind="piecewise",
        )
        self._x = None
        self._steps = 0

    def spec(self) -> EnvSpec:
        return self._spec

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._x = rng.uniform(-1.0, 1.0, self._spec.state_dim)
        self._steps = 0
        return self._x.copy()

    def step(self, action) -> StepResult:
        if self._x is None:
            raise InputError("step before reset")
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        d = a - self.teacher.predict(self._x)
        reward = 1.0 - float(d @ d)
        self._x = np.clip(self._x + POINT_MASS_GAIN * a, -1.0, 1.0)
        self._steps += 1
        return StepResult(
            observation=self._x.copy(), reward=reward,
            terminated=False, truncated=self._steps >= self._spec.max_steps,
        )

    def close(self):
        pass


def make_piecewise_env(regions: int, dims: int, seed: int, behavior_noise: float = 0.0):
    """Sample a piecewise-linear bench with its exact oracles.

    Returns (env, teacher, critic, gates) where gates are the exact
    serve-here halfspace gates matching the teacher's region chain
    (identity standardizer); the last region needs no gate.

    Each halfspace offset is placed at a sampled 0.92-0.95 quantile of
    its projection over the residual region (measured on a seeded probe
    cloud), so every region in the chain holds a clear majority of what
    remains. A region fit then locks onto the majority map instead of
    averaging neighbors, which keeps the serve-here labels aligned with
    the true boundary; without that margin the early fits blend maps
    and no linear gate can match the resulting label geometry. Teacher
    actions stay strictly inside the action box so clipping never
    distorts rewards or values.
    """
    if regions < 1:
        raise InputError("regions must be >= 1")
    if dims < 1:
        raise InputError("dims must be >= 1")
    rng = np.random.default_rng(seed)
    hw = rng.normal(0.0, 1.0, (regions - 1, dims))
    hw /= np.linalg.norm(hw, axis=1, keepdims=True)
    probe = rng.uniform(-1.0, 1.0, (8192, dims))
    hc = np.zeros(regions - 1)
    remainder = probe
    for i in range(regions - 1):
        share = rng.uniform(0.92, 0.95)
        cloud = remainder if remainder.shape[0] >= 64 else probe
        hc[i] = -float(np.quantile(cloud @ hw[i], share))
        remainder = remainder[remainder @ hw[i] + hc[i] > 0.0]
    low, high = -2.0 * np.ones(dims), 2.0 * np.ones(dims)
    maps = []
    # first region: stabilizing controller a = W (s - target) whose
    # set-point sits inside that region, so closed-loop rollouts settle
    # in recorded territory instead of drifting to the state-box walls.
    # Off-diagonal row sums stay below the diagonal (Gershgorin), so the
    # closed loop x' = x + 0.1 a contracts under any positive row scale.
    coupling = 0.3 / max(1, dims - 1)
    W = rng.uniform(-coupling, coupling, (dims, dims))
    W[np.diag_indices(dims)] = -rng.uniform(0.4, 1.0, dims)
    target = rng.uniform(-0.45, 0.45, dims)
    if regions > 1:
        depth = float(hw[0] @ target) + hc[0]
        if depth > -0.2:
            target = target - (depth + 0.2) * hw[0]
    b = -W @ target
    sup = np.abs(W).sum(axis=1) + np.abs(b)
    row_scale = rng.uniform(1.2, 1.7, dims) / sup
    maps.append(LinearSubpolicy(
        W=W * row_scale[:, None], b=b * row_scale,
        action_low=low, action_high=high,
    ))
    # outer regions: fixed recovery thrusts aimed back across the first
    # boundary, mutually well separated so each region is distinguishable
    # in action space
    thrusts: list[np.ndarray] = []
    for _ in range(regions - 1):
        for _ in range(64):
            lat = rng.uniform(-0.6, 0.6, dims)
            if regions > 1:
                lat = lat - float(lat @ hw[0]) * hw[0]
            c = -rng.uniform(1.0, 1.2) * hw[0] + lat
            if all(np.linalg.norm(c - prev) >= 0.8 for prev in thrusts):
                break
        thrusts.append(c)
        maps.append(LinearSubpolicy(
            W=np.zeros((dims, dims)), b=c,
            action_low=low, action_high=high,
        ))
    maps = tuple(maps)
    teacher = PiecewiseTeacher(maps=maps, halfspace_w=hw, halfspace_c=hc)
    # serve-here gate for region i: 1 iff w_i . s + c_i < 0, so flip signs
    gates = tuple(
        SvmGate(w=-hw[i], b=-float(hc[i]), mean=np.zeros(dims), scale=np.ones(dims))
        for i in range(regions - 1)
    )
    critic = PiecewiseCritic(teacher, behavior_noise=behavior_noise)
    return PiecewiseLinearEnv(teacher), teacher, critic, gates


def piecewise_from_descriptor(path):
    """Rebuild the bench named by a descriptor document (kind/regions/dims/seed).

    An optional "behavior_noise" field names the exploration scale the
    critic assumes for recorded behavior; it feeds the oracle's state
    value so labels carry the same margin the bench was built with.
    """
    doc = read_json(path)
    try:
        if doc["kind"] != "piecewise":
            raise InputError(f"descriptor {path} has kind {doc['kind']!r}, expected 'piecewise'")
        return make_piecewise_env(
            int(doc["regions"]), int(doc["dims"]), int(doc["seed"]),
            behavior_noise=float(doc.get("behavior_noise", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed env descriptor {path}: {exc}") from None


def quadratic_critic_network(half_range: int = 3) -> MlpNetwork:
    """Encode Q(s, a) = 1 - (a - 2s)^2 as a relu network on [s, a].

    Piecewise-linear interpolation of 1 - z^2 (z = a - 2s) with kinks at
    the integers, exact at integer z and within [-half_range, half_range];
    used to exercise the network critic path against a closed form.
    """
    k = int(half_range)
    if k < 1:
        raise InputError("half_range must be >= 1")
    knots = np.arange(-k, k)
    first = Layer(w=np.array([[-2.0, 1.0]]), b=np.zeros(1), act="linear")
    hidden = Layer(w=np.ones((2 * k, 1)), b=-knots.astype(np.float64), act="relu")
    coefs = np.full(2 * k, -2.0)
    coefs[0] = 2.0 * k - 1.0
    last = Layer(w=coefs[None, :], b=np.array([1.0 - k * k]), act="linear")
    return MlpNetwork(layers=(first, hidden, last), input_kind="state_action")


def record_dataset(env, actor, episodes: int, base_seed: int,
                   noise_std: float = 0.0):
    """Roll the actor in the env and record visited (state, action) rows.

    actor is a callable state -> action; optional Gaussian noise is
    added to the recorded (and executed) action before bound clamping,
    standing in for the exploratory jitter of real recorded behavior.
    Episode e resets with base_seed + e; the noise stream is seeded by
    base_seed alone.
    """
    from .core import DatasetManifest, make_dataset

    if episodes < 1:
        raise InputError("episodes must be >= 1")
    if noise_std < 0:
        raise InputError("noise_std must be >= 0")
    spec = env.spec()
    rng = np.random.default_rng(base_seed)
    states, actions = [], []
    for e in range(episodes):
        obs = env.reset(base_seed + e)
        while True:
            a = np.asarray(actor(obs), dtype=np.float64)
            if noise_std > 0:
                a = a + rng.normal(0.0, noise_std, spec.action_dim)
            a = np.clip(a, spec.action_low, spec.action_high)
            states.append(obs)
            actions.append(a)
            res = env.step(a)
            obs = res.observation
            if res.terminated or res.truncated:
                break
    dataset = make_dataset(
        np.asarray(states), np.asarray(actions),
        action_low=spec.action_low, action_high=spec.action_high,
    )
    manifest = DatasetManifest(
        state_dim=spec.state_dim, action_dim=spec.action_dim,
        action_low=spec.action_low, action_high=spec.action_high,
        episode_count=episodes,
    )
    return dataset, manifest


class BridgeEnv:
    """Client for an external environment behind a line-protocol child.

    One request line out, one response line back, newline-delimited
    JSON over the child's standard streams. The client refuses to step
    before a reset and surfaces any framing breach as ProtocolError.
    """

    def __init__(self, argv, start_timeout: float = 30.0):
        if isinstance(argv, str):
            argv = shlex.split(argv)
        if not argv:
            raise InputError("empty bridge command")
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot start bridge command {argv[0]!r}: {exc}") from None
        self._timeout = start_timeout
        self._spec = None
        self._in_episode = False

    def _request(self, doc: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise ProtocolError(f"bridge process exited with code {proc.returncode}")
        try:
            proc.stdin.write(json.dumps(doc) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (OSError, ValueError) as exc:
            raise ProtocolError(f"bridge stream failure: {exc}") from None
        if not line:
            raise ProtocolError("bridge closed its stream mid-request")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError(f"bridge sent a malformed line: {line.strip()[:200]!r}") from None
        if not isinstance(reply, dict):
            raise ProtocolError(f"bridge reply is not an object: {line.strip()[:200]!r}")
        if "error" in reply:
            raise ProtocolError(f"bridge error: {reply['error']}")
        return reply

    def spec(self) -> EnvSpec:
        if self._spec is None:
            doc = self._request({"cmd": "spec"})
            try:
                self._spec = EnvSpec(
                    state_dim=int(doc["state_dim"]),
                    action_dim=int(doc["action_dim"]),
                    action_low=np.asarray(doc["action_low"], dtype=np.float64),
                    action_high=np.asarray(doc["action_high"], dtype=np.float64),
                    max_steps=int(doc["max_steps"]),
                    kind="external",
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"bridge spec document malformed: {exc}") from None
        return self._spec

    def reset(self, seed: int) -> np.ndarray:
        doc = self._request({"cmd": "reset", "seed": int(seed)})
        try:
            obs = np.asarray(doc["obs"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bridge reset reply malformed: {exc}") from None
        self._in_episode = True
        return obs

    def step(self, action) -> StepResult:
        if not self._in_episode:
            raise ProtocolError("step before reset")
        a = [float(x) for x in np.asarray(action, dtype=np.float64)]
        doc = self._request({"cmd": "step", "action": a})
        try:
            result = StepResult(
                observation=np.asarray(doc["obs"], dtype=np.float64),
                reward=float(doc["reward"]),
                terminated=bool(doc["terminated"]),
                truncated=bool(doc["truncated"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bridge step reply malformed: {exc}") from None
        if result.terminated or result.truncated:
            self._in_episode = False
        return result

    def close(self):
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.write(json.dumps({"cmd": "close"}) + "\n")
                proc.stdin.flush()
            except (OSError, ValueError):
                pass
            try:
                proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def make_env(selector: str):
    """Build an environment from a selector string.

    builtin:pointmass:<dims> | builtin:piecewise:<descriptor path> |
    bridge:<command line>
    """
    if selector.startswith("bridge:"):
        return BridgeEnv(selector[len("bridge:"):])
    if selector.startswith("builtin:pointmass:"):
        try:
            dims = int(selector.rsplit(":", 1)[1])
        except ValueError:
            raise InputError(f"bad point-mass dims in selector {selector!r}") from None
        return PointMassEnv(dims=dims)
    if selector.startswith("builtin:piecewise:"):
        return piecewise_from_descriptor(selector[len("builtin:piecewise:"):])[0]
    raise InputError(f"unknown env selector {selector!r}")

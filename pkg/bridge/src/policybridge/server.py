"""Line-protocol environment server: one JSON request per line on stdin,
one JSON reply per line on stdout.

Requests: {"cmd": "spec"} | {"cmd": "reset", "seed": int} |
{"cmd": "step", "action": [floats]} | {"cmd": "close"}.
A bad request earns an {"error": ...} line and the server keeps
serving; only "close" (or end of input) ends the process, with exit
code 0.
"""

from __future__ import annotations

import json
import sys

from .envs import make_bridge_env
from .errors import BridgeError


def _spec_reply(env) -> dict:
    return {
        "state_dim": env.obs_dim,
        "action_dim": env.action_dim,
        "action_low": [float(v) for v in env.action_low],
        "action_high": [float(v) for v in env.action_high],
        "max_steps": env.max_steps,
    }


def _handle(env, req: dict, state: dict) -> dict | None:
    cmd = req.get("cmd")
    if cmd == "spec":
        return _spec_reply(env)
    if cmd == "reset":
        if "seed" not in req:
            raise BridgeError("reset needs a seed")
        obs = env.reset(int(req["seed"]))
        state["in_episode"] = True
        return {"obs": [float(v) for v in obs]}
    if cmd == "step":
        if not state["in_episode"]:
            raise BridgeError("step before reset")
        action = req.get("action")
        if not isinstance(action, list) or len(action) != env.action_dim:
            raise BridgeError(f"step needs an action list of length {env.action_dim}")
        obs, reward, terminated, truncated = env.step([float(v) for v in action])
        if terminated or truncated:
            state["in_episode"] = False
        return {"obs": [float(v) for v in obs], "reward": float(reward),
                "terminated": terminated, "truncated": truncated}
    if cmd == "close":
        return None
    raise BridgeError(f"unknown command {cmd!r}")


def serve_env(env_id: str, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    env = make_bridge_env(env_id)
    state = {"in_episode": False}
    try:
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            try:
                req = json.loads(line)
                if not isinstance(req, dict):
                    raise BridgeError("request is not a JSON object")
                reply = _handle(env, req, state)
            except json.JSONDecodeError:
                reply = {"error": "request is not valid JSON"}
            except (BridgeError, TypeError, ValueError) as exc:
                reply = {"error": str(exc)}
            if reply is None:
                break
            stdout.write(json.dumps(reply) + "\n")
            stdout.flush()
    finally:
        env.close()
    return 0

"""Binary checkpoint format for policy/value networks.

Layout of a checkpoint file (all integers little-endian):

    bytes 0..7    magic b"LLCPPO\\r\\n"
    bytes 8..11   format version (uint32, currently 1)
    bytes 12..15  JSON header length in bytes (uint32)
    header        UTF-8 JSON
    payload       concatenated float64 row-major tensors

The header lists every payload tensor with its shape in order, the network
dimensions, the PPO configuration, training progress counters plus the
master seed (episode seeds are derived from these, so they are the full
RNG state), Adam step counters, and the observation-normalization
constants the policy was trained with.  Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from typing import Any

import numpy as np

from .circuit import PARAM_RANGES
from .environment import POWER_SCALE
from .ppo import PpoAgent, PpoConfig

MAGIC = b"LLCPPO\r\n"
VERSION = 1


class CheckpointError(RuntimeError):
    """A checkpoint file failed validation on load."""


def _tensor_manifest(agent: PpoAgent, include_optimizer: bool) -> list[tuple[str, np.ndarray]]:
    tensors: list[tuple[str, np.ndarray]] = []
    for i in range(agent.policy.n_layers):
        tensors.append((f"policy.w{i}", agent.policy.weights[i]))
        tensors.append((f"policy.b{i}", agent.policy.biases[i]))
    tensors.append(("log_std", agent.log_std))
    for i in range(agent.value.n_layers):
        tensors.append((f"value.w{i}", agent.value.weights[i]))
        tensors.append((f"value.b{i}", agent.value.biases[i]))
    if include_optimizer:
        for opt, tag in ((agent.opt_policy, "adam_policy"), (agent.opt_value, "adam_value")):
            for j, m in enumerate(opt.m):
                tensors.append((f"{tag}.m{j}", m))
            for j, v in enumerate(opt.v):
                tensors.append((f"{tag}.v{j}", v))
    return tensors


def save_checkpoint(
    agent: PpoAgent,
    path,
    *,
    episodes_done: int = 0,
    batches_done: int = 0,
    master_seed: int | None = None,
    include_optimizer: bool = True,
) -> None:
    """Serialize the agent (and optionally its Adam state) to path."""
    tensors = _tensor_manifest(agent, include_optimizer)
    header: dict[str, Any] = {
        "policy_dims": list(agent.policy.dims),
        "value_dims": list(agent.value.dims),
        "tensors": [[name, list(t.shape)] for name, t in tensors],
        "ppo_config": vars(agent.config) | {},
        "rng": {
            "master_seed": master_seed,
            "episodes_done": episodes_done,
            "batches_done": batches_done,
        },
        "adam": (
            {"t_policy": agent.opt_policy.t, "t_value": agent.opt_value.t}
            if include_optimizer
            else None
        ),
        "normalization": {
            "power_scale": POWER_SCALE,
            "param_ranges": {k: list(v) for k, v in PARAM_RANGES.items()},
        },
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for _, tensor in tensors:
            fh.write(np.ascontiguousarray(tensor, dtype=np.float64).tobytes())


def load_checkpoint(path) -> tuple[PpoAgent, dict]:
    """Reconstruct an agent from a checkpoint; returns (agent, metadata).

    Raises CheckpointError naming the offending field on any mismatch.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"bad magic string {raw[:len(MAGIC)]!r}")
    try:
        version, header_len = struct.unpack_from("<II", raw, len(MAGIC))
    except struct.error as exc:
        raise CheckpointError("truncated fixed header") from exc
    if version != VERSION:
        raise CheckpointError(f"unsupported format version {version}")
    start = len(MAGIC) + 8
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError("corrupt JSON header") from exc

    for key in ("policy_dims", "value_dims", "tensors", "ppo_config", "rng"):
        if key not in header:
            raise CheckpointError(f"header missing field {key!r}")
    policy_dims = tuple(header["policy_dims"])
    value_dims = tuple(header["value_dims"])
    if policy_dims[0] != value_dims[0]:
        raise CheckpointError(
            f"policy/value input dims disagree: {policy_dims[0]} vs {value_dims[0]}"
        )

    agent = PpoAgent(
        config=PpoConfig(**header["ppo_config"]),
        obs_size=policy_dims[0],
        act_size=policy_dims[-1],
        hidden_size=policy_dims[1],
    )
    expected = {name: t.shape for name, t in _tensor_manifest(agent, include_optimizer=True)}

    offset = start + header_len
    loaded: dict[str, np.ndarray] = {}
    for name, shape in header["tensors"]:
        shape = tuple(shape)
        if name not in expected:
            raise CheckpointError(f"unknown tensor {name!r}")
        if expected[name] != shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {shape}, expected {expected[name]}"
            )
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"truncated payload (tensor {name!r})")
        loaded[name] = np.frombuffer(raw[offset:end], dtype=np.float64).reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{len(raw) - offset} trailing bytes after payload")

    for i in range(agent.policy.n_layers):
        _assign(agent.policy.weights[i], loaded, f"policy.w{i}")
        _assign(agent.policy.biases[i], loaded, f"policy.b{i}")
    _assign(agent.log_std, loaded, "log_std")
    for i in range(agent.value.n_layers):
        _assign(agent.value.weights[i], loaded, f"value.w{i}")
        _assign(agent.value.biases[i], loaded, f"value.b{i}")

    adam = header.get("adam")
    if adam is not None:
        agent.opt_policy.t = int(adam["t_policy"])
        agent.opt_value.t = int(adam["t_value"])
        for opt, tag in ((agent.opt_policy, "adam_policy"), (agent.opt_value, "adam_value")):
            for j in range(len(opt.m)):
                _assign(opt.m[j], loaded, f"{tag}.m{j}")
                _assign(opt.v[j], loaded, f"{tag}.v{j}")

    meta = {
        "version": version,
        "episodes_done": int(header["rng"]["episodes_done"]),
        "batches_done": int(header["rng"]["batches_done"]),
        "master_seed": header["rng"]["master_seed"],
    }
    return agent, meta


def _assign(target: np.ndarray, loaded: dict[str, np.ndarray], name: str) -> None:
    if name not in loaded:
        raise CheckpointError(f"payload missing tensor {name!r}")
    target[...] = loaded[name]

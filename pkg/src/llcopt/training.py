"""Training loop: batched episode collection, PPO updates, metrics, checkpoints.

Every episode gets its own RNG streams derived from (master seed, stream
tag, episode index), and the update shuffling derives from the batch
index.  The set of episodes a run produces therefore depends only on the
master seed and episode count, never on worker count or scheduling, and a
run can resume from any checkpoint bit-exactly.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .circuit import ValidationError
from .config import RunConfig, config_hash
from .environment import STATE_SIZE, EpisodeConfig, LlcEnv, TargetSpec
from .ppo import NonFiniteLossError, PpoAgent, Trajectory, gaussian_log_prob

_ENV_STREAM = 0
_ACTION_STREAM = 1
_UPDATE_STREAM = 2
_EVAL_STREAM = 3

METRICS_COLUMNS = (
    "batch", "episodes_done", "reward_mean", "reward_min", "reward_max",
    "policy_loss", "value_loss", "kl",
)
AGGREGATE_COLUMNS = (
    "batch", "episodes_done", "reward_mean", "reward_std",
    "reward_min_mean", "reward_max_mean",
)


def derived_rng(master_seed: int, stream: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, stream, *indices)))


def collect_batch(
    agent: PpoAgent,
    cfg: RunConfig,
    master_seed: int,
    first_episode: int,
    n_episodes: int,
) -> tuple[list[Trajectory], np.ndarray]:
    """Roll out n_episodes in lockstep; returns trajectories and terminal rewards.

    All environments advance together so the policy/value forward pass runs
    batched; each environment still consumes only its own derived RNG
    streams.  Worker threads (cfg.workers > 1) split the environment
    stepping, which cannot change the result.
    """
    steps = cfg.episode.steps
    envs = [LlcEnv(cfg.episode, cfg.loss) for _ in range(n_episodes)]
    action_rngs = [
        derived_rng(master_seed, _ACTION_STREAM, first_episode + i) for i in range(n_episodes)
    ]
    obs = np.empty((n_episodes, STATE_SIZE))
    for i, env in enumerate(envs):
        obs[i] = env.reset(seed=_spawn_seed(master_seed, _ENV_STREAM, first_episode + i))

    states = np.empty((n_episodes, steps, STATE_SIZE))
    actions = np.empty((n_episodes, steps, 6))
    log_probs = np.empty((n_episodes, steps))
    values = np.empty((n_episodes, steps))
    rewards = np.zeros((n_episodes, steps))
    dones = np.zeros((n_episodes, steps))

    def step_range(args):
        lo, hi, step_actions = args
        for i in range(lo, hi):
            next_obs, reward, _ = envs[i].step(step_actions[i])
            rewards[i, t] = reward
            obs[i] = next_obs

    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for t in range(steps):
            mean, log_std, value = agent.policy_forward(obs)
            noise = np.stack([rng.standard_normal(6) for rng in action_rngs])
            raw = mean + np.exp(log_std) * noise
            states[:, t] = obs
            actions[:, t] = raw
            log_probs[:, t] = gaussian_log_prob(raw, mean, log_std)
            values[:, t] = value
            clipped = np.clip(raw, -1.0, 1.0)
            if pool is None:
                step_range((0, n_episodes, clipped))
            else:
                chunk = -(-n_episodes // cfg.workers)
                bounds = [
                    (lo, min(lo + chunk, n_episodes), clipped)
                    for lo in range(0, n_episodes, chunk)
                ]
                list(pool.map(step_range, bounds))
    finally:
        if pool is not None:
            pool.shutdown()
    dones[:, -1] = 1.0

    trajectories = [
        Trajectory(states[i], actions[i], log_probs[i], values[i], rewards[i], dones[i])
        for i in range(n_episodes)
    ]
    return trajectories, rewards[:, -1].copy()


def _spawn_seed(master_seed: int, stream: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((master_seed, stream, index))


def _lr_scale(ppo, batch: int, total_batches: int) -> float:
    """Linear decay from 1 to lr_decay_to over the run's batches."""
    if total_batches <= 1:
        return 1.0
    return 1.0 - (1.0 - ppo.lr_decay_to) * (batch / (total_batches - 1))


def train_one_seed(
    cfg: RunConfig,
    master_seed: int,
    out_dir: Path,
    agent: PpoAgent | None = None,
    start_batch: int = 0,
    episodes_done: int = 0,
) -> tuple[PpoAgent, list[dict]]:
    """Run (or resume) the episode/update loop for one master seed.

    Writes metrics.csv and periodic checkpoints into out_dir; returns the
    trained agent, the metrics rows and the per-episode terminal rewards.
    On a non-finite loss the current weights are checkpointed to
    halted.ckpt before the error propagates.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    if agent is None:
        agent = PpoAgent(config=cfg.ppo, seed=master_seed)
    rows: list[dict] = []
    terminal_rewards: list[np.ndarray] = []
    batch_size = cfg.ppo.batch_episodes
    total_batches = -(-cfg.episodes // batch_size) if cfg.episodes else 0

    metrics_path = out_dir / "metrics.csv"
    mode = "a" if start_batch > 0 and metrics_path.exists() else "w"
    with open(metrics_path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            fh.write(f"# config: {config_hash(cfg)} seed: {master_seed}\n")
            writer.writerow(METRICS_COLUMNS)
        for batch in range(start_batch, total_batches):
            n = min(batch_size, cfg.episodes - batch * batch_size)
            trajectories, terminal = collect_batch(agent, cfg, master_seed, episodes_done, n)
            episodes_done += n
            terminal_rewards.append(terminal)
            agent.set_learning_rate(cfg.ppo.learning_rate * _lr_scale(cfg.ppo, batch, total_batches))
            try:
                stats = agent.update(trajectories, derived_rng(master_seed, _UPDATE_STREAM, batch))
            except NonFiniteLossError:
                save_checkpoint(
                    agent, out_dir / "halted.ckpt",
                    episodes_done=episodes_done, batches_done=batch, master_seed=master_seed,
                )
                raise
            row = {
                "batch": batch,
                "episodes_done": episodes_done,
                "reward_mean": float(np.mean(terminal)),
                "reward_min": float(np.min(terminal)),
                "reward_max": float(np.max(terminal)),
                "policy_loss": stats["policy_loss"],
                "value_loss": stats["value_loss"],
                "kl": stats["kl"],
            }
            rows.append(row)
            writer.writerow(_format_row(row, METRICS_COLUMNS))
            if (batch + 1) % cfg.checkpoint_interval == 0:
                save_checkpoint(
                    agent, out_dir / f"checkpoint_{batch + 1:05d}.ckpt",
                    episodes_done=episodes_done, batches_done=batch + 1, master_seed=master_seed,
                )
    save_checkpoint(
        agent, out_dir / "final.ckpt",
        episodes_done=episodes_done,
        batches_done=total_batches,
        master_seed=master_seed,
    )
    episode_rewards = (
        np.concatenate(terminal_rewards) if terminal_rewards else np.empty(0)
    )
    return agent, rows, episode_rewards


def run_training(cfg: RunConfig, out_dir) -> dict:
    """Train every configured seed; writes per-seed and aggregate metrics.

    Returns a summary with per-seed final checkpoint paths and metric rows.
    """
    cfg.validate()
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out_dir}: {exc}") from exc

    per_seed_rows: dict[int, list[dict]] = {}
    per_seed_rewards: dict[int, np.ndarray] = {}
    checkpoints: dict[int, Path] = {}
    for seed in cfg.seeds:
        seed_dir = out_dir / f"seed_{seed}"
        _, rows, episode_rewards = train_one_seed(cfg, seed, seed_dir)
        per_seed_rows[seed] = rows
        per_seed_rewards[seed] = episode_rewards
        checkpoints[seed] = seed_dir / "final.ckpt"

    aggregate = aggregate_metrics(per_seed_rows)
    agg_path = out_dir / "metrics_aggregate.csv"
    with open(agg_path, "w", newline="") as fh:
        fh.write(f"# config: {config_hash(cfg)} seeds: {list(cfg.seeds)}\n")
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in aggregate:
            writer.writerow(_format_row(row, AGGREGATE_COLUMNS))
    return {
        "checkpoints": checkpoints,
        "metrics": per_seed_rows,
        "episode_rewards": per_seed_rewards,
        "aggregate": aggregate,
        "aggregate_path": agg_path,
    }


def aggregate_metrics(per_seed_rows: dict[int, list[dict]]) -> list[dict]:
    """Across-seed mean/std of episode rewards per batch (Fig. 3 style)."""
    if not per_seed_rows:
        return []
    n_batches = min(len(rows) for rows in per_seed_rows.values())
    out = []
    for b in range(n_batches):
        batch_rows = [rows[b] for rows in per_seed_rows.values()]
        means = np.array([r["reward_mean"] for r in batch_rows])
        out.append({
            "batch": batch_rows[0]["batch"],
            "episodes_done": batch_rows[0]["episodes_done"],
            "reward_mean": float(np.mean(means)),
            "reward_std": float(np.std(means)),
            "reward_min_mean": float(np.mean([r["reward_min"] for r in batch_rows])),
            "reward_max_mean": float(np.mean([r["reward_max"] for r in batch_rows])),
        })
    return out


def _format_row(row: dict, columns: tuple[str, ...]) -> list[str]:
    out = []
    for name in columns:
        value = row[name]
        out.append(str(value) if isinstance(value, int) else repr(float(value)))
    return out


def evaluate_policy(
    agent: PpoAgent,
    targets: list[TargetSpec],
    inits_per_target: int,
    seed: int,
    episode: EpisodeConfig | None = None,
    loss=None,
) -> list[dict]:
    """Deterministic-policy evaluation: several random inits per target.

    Reports per-target means of the episode reward, the relative power
    deviations |p_r - p_t| / p_t and the efficiencies at both operation
    points, plus the raw per-init samples.
    """
    if agent.policy.dims[0] != STATE_SIZE:
        raise ValidationError(
            f"checkpoint expects {agent.policy.dims[0]}-dim states, environment has {STATE_SIZE}"
        )
    episode = episode or EpisodeConfig()
    results = []
    for ti, target in enumerate(targets):
        samples = []
        for j in range(inits_per_target):
            env = LlcEnv(episode, loss)
            obs = env.reset(target=target, seed=np.random.SeedSequence((seed, _EVAL_STREAM, ti, j)))
            done = False
            while not done:
                obs, reward, done = env.step(agent.deterministic_action(obs))
            samples.append({
                "reward": reward,
                "dp1": abs(env.op_1.p_r - target.p_t1) / target.p_t1,
                "dp2": abs(env.op_2.p_r - target.p_t2) / target.p_t2,
                "e1": env.op_1.e,
                "e2": env.op_2.e,
            })
        results.append({
            "target": target,
            "mean_reward": float(np.mean([s["reward"] for s in samples])),
            "mean_dp1": float(np.mean([s["dp1"] for s in samples])),
            "mean_dp2": float(np.mean([s["dp2"] for s in samples])),
            "mean_e1": float(np.mean([s["e1"] for s in samples])),
            "mean_e2": float(np.mean([s["e2"] for s in samples])),
            "samples": samples,
        })
    return results

"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Criteria 5-7 share one desk-scale training run (10,000 episodes, single
seed, single worker) provided by a session fixture; expect the whole
module to take several minutes.  Run with -s to see the report lines.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from llcopt.baselines import hill_climb
from llcopt.checkpoint import load_checkpoint
from llcopt.circuit import LOSSLESS, LossModel, simulate_operating_point
from llcopt.cli import main
from llcopt.config import load_run_config
from llcopt.environment import (
    EpisodeConfig,
    TargetSpec,
    power_reward,
    scale_power_reward,
    total_reward,
)
from llcopt.evaluation import GridSpec, grid_eval
from llcopt.ppo import PpoAgent, PpoConfig, gaussian_log_prob, normalize_advantages
from llcopt.training import collect_batch, run_training
from oracles import mesh_operating_point, random_circuit_params
from test_networks import finite_difference
from test_ppo import toy_batch

DESK_CONFIG = Path(__file__).parent.parent / "configs" / "desk.yaml"


def report(number: int, description: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    print(f"\n[acceptance {number}] {status} — {description}" + (f" ({detail})" if detail else ""))
    assert passed, f"criterion {number} failed: {description} {detail}"


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """Train the desk-scale agent once; criteria 5-7 consume it."""
    cfg = load_run_config(DESK_CONFIG)
    out_dir = tmp_path_factory.mktemp("desk_run")
    start = time.perf_counter()
    summary = run_training(cfg, out_dir)
    elapsed = time.perf_counter() - start
    return {
        "cfg": cfg,
        "out_dir": out_dir,
        "summary": summary,
        "elapsed": elapsed,
        "checkpoint": summary["checkpoints"][cfg.seeds[0]],
    }


def test_criterion_1_circuit_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10000):
        params = random_circuit_params(rng)
        f = rng.uniform(10e3, 100e3)
        loss = LossModel(rng.uniform(0, 0.3), rng.uniform(0, 0.2), rng.uniform(0, 1.0))
        mine = simulate_operating_point(params, f, loss)
        p_ref, e_ref = mesh_operating_point(params, f, loss)
        worst = max(worst, abs(mine.p_r - p_ref) / p_ref, abs(mine.e - e_ref) / e_ref)
    lossless_ok = True
    for _ in range(2000):
        params = random_circuit_params(rng)
        result = simulate_operating_point(params, rng.uniform(10e3, 100e3), LOSSLESS)
        lossless_ok &= abs(result.e - 1.0) <= 1e-12
    elapsed = time.perf_counter() - start
    report(
        1,
        "closed-form FHA matches mesh oracle (1e4 draws, rel 1e-9); lossless e=1",
        worst <= 1e-9 and lossless_ok and elapsed < 10.0,
        f"max rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_reward_arithmetic():
    checks = [
        abs(power_reward(100.0, 300.0) - 0.5) <= 1e-15,
        abs(power_reward(200.0, 200.0) - 1.0) <= 1e-15,
        power_reward(0.0, 4700.0) == 0.0,
        scale_power_reward(0.815, 0.815) == 0.0,
        scale_power_reward(0.8149999, 0.815) is None,
        abs(scale_power_reward(1.0, 0.815) - 1.0) <= 1e-15,
        abs(scale_power_reward(0.9075, 0.815) - 0.5) <= 1e-15,
        abs(total_reward(0.95, 0.99, 0.8, 0.9) - 0.91) <= 1e-15,
        total_reward(1.0, 1.0, None, 1.0) == 0.0,
        abs(total_reward(1.0, 1.0, 1.0, 1.0) - 1.0) <= 1e-15,
    ]
    report(2, "reward arithmetic exact (deviation norm, threshold, total)", all(checks))


def test_criterion_3_ppo_gradient_check():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(100):
        agent = PpoAgent(
            config=PpoConfig(entropy_coeff=0.01 if seed % 3 == 0 else 0.0),
            seed=seed, obs_size=3, act_size=2, hidden_size=4,
        )
        agent.log_std[...] = np.random.default_rng(seed).uniform(-1.0, 0.5, 2)
        batch = toy_batch(agent, np.random.default_rng(50000 + seed))
        _, _, grads_policy, grads_value = agent.loss_and_grads(*batch)

        def loss_fn():
            return agent.loss_and_grads(*batch)[0]

        params = agent.policy.parameters() + [agent.log_std] + agent.value.parameters()
        grads = grads_policy + grads_value
        for param, grad in zip(params, grads):
            numeric = finite_difference(loss_fn, param, h=1e-5)
            # relative error with a floor for entries below finite-difference noise
            scale = np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), 1e-6)
            worst = max(worst, float(np.max(np.abs(grad - numeric) / scale)))
    elapsed = time.perf_counter() - start
    report(
        3,
        "analytic PPO gradients match central differences (100 toy instances)",
        worst <= 1e-4 and elapsed < 60.0,
        f"max rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_4_fixed_seed_determinism(tmp_path):
    from dataclasses import replace

    cfg = load_run_config(DESK_CONFIG)
    assert cfg.workers == 1
    cfg = replace(cfg, episodes=50 * cfg.ppo.batch_episodes)
    run_training(cfg, tmp_path / "run_a")
    run_training(cfg, tmp_path / "run_b")
    a = (tmp_path / "run_a" / f"seed_{cfg.seeds[0]}" / "metrics.csv").read_bytes()
    b = (tmp_path / "run_b" / f"seed_{cfg.seeds[0]}" / "metrics.csv").read_bytes()
    n_rows = len(a.splitlines()) - 2
    report(
        4,
        "50-batch fixed-seed training reproduces metrics CSV bit-identically",
        a == b and n_rows == 50,
        f"{len(a)} bytes, {n_rows} batch rows",
    )


def test_criterion_5_desk_scale_training(desk_run):
    cfg = desk_run["cfg"]
    episode_rewards = desk_run["summary"]["episode_rewards"][cfg.seeds[0]]
    assert len(episode_rewards) == cfg.episodes
    trained_mean = float(np.mean(episode_rewards[-500:]))

    batch_size = cfg.ppo.batch_episodes
    untrained = PpoAgent(config=cfg.ppo, seed=cfg.seeds[0])
    terminal = []
    batch = 0
    while len(terminal) < 500:
        _, rewards = collect_batch(untrained, cfg, cfg.seeds[0], batch * batch_size, batch_size)
        terminal.extend(rewards.tolist())
        batch += 1
    untrained_mean = float(np.mean(terminal[:500]))

    elapsed = desk_run["elapsed"]
    report(
        5,
        "desk-scale training: last-500-episode mean >= 0.80, >= 0.15 over untrained, <= 30 min",
        trained_mean >= 0.80 and trained_mean - untrained_mean >= 0.15 and elapsed <= 1800.0,
        f"trained {trained_mean:.3f}, untrained {untrained_mean:.3f}, {elapsed/60:.1f} min",
    )


def test_criterion_6_grid_evaluation_vs_hill_climb(desk_run):
    cfg = desk_run["cfg"]
    agent, _ = load_checkpoint(desk_run["checkpoint"])
    grid = GridSpec.regular(5, 5)
    inits = 5
    eval_report = grid_eval(agent, grid, inits=inits, seed=7,
                            episode=cfg.episode, loss=cfg.loss)
    mean_dp = eval_report.mean_power_deviation_pct()
    mean_e = eval_report.mean_efficiency()
    agent_reward = eval_report.mean_reward()

    climber_rewards = []
    for ti, target in enumerate(grid.targets()):
        for init in range(inits):
            result = hill_climb(target, budget=cfg.episode.steps,
                                seed=1000 * ti + init, loss=cfg.loss, episode=cfg.episode)
            climber_rewards.append(result.best_reward)
    climber_mean = float(np.mean(climber_rewards))

    report(
        6,
        "5x5 grid: mean deviation <= 10%, mean efficiency >= 0.85, beats 50-eval hill climb",
        mean_dp <= 10.0 and mean_e >= 0.85 and agent_reward > climber_mean,
        f"dP {mean_dp:.2f}%, e {mean_e:.3f}, agent {agent_reward:.3f} vs climber {climber_mean:.3f}",
    )


def test_criterion_7_episode_trace_fidelity(desk_run, tmp_path, capsys):
    code = main([
        "optimize", "--checkpoint", str(desk_run["checkpoint"]),
        "--pt1", "140", "--pt2", "4700", "--seed", "11",
        "--out", str(tmp_path), "--no-figures",
    ])
    capsys.readouterr()
    assert code == 0
    lines = (tmp_path / "optimize_trace_seed11.csv").read_text().splitlines()
    header = lines[1].split(",")
    data = [dict(zip(header, line.split(","))) for line in lines[2:]]
    threshold = desk_run["cfg"].episode.reward_threshold

    ok_rows = len(data) == 50
    ok_recombine = True
    ok_ranges = True
    from llcopt.circuit import PARAM_RANGES

    for row in data:
        r_p1 = scale_power_reward(power_reward(float(row["p_r1"]), 140.0), threshold)
        r_p2 = scale_power_reward(power_reward(float(row["p_r2"]), 4700.0), threshold)
        expected = total_reward(float(row["e_1"]), float(row["e_2"]), r_p1, r_p2)
        ok_recombine &= float(row["reward"]) == expected
        for name, (lo, hi) in PARAM_RANGES.items():
            ok_ranges &= lo <= float(row[name]) <= hi
    report(
        7,
        "optimize --pt1 140 --pt2 4700: 50 rows, components recombine exactly, ranges kept",
        ok_rows and ok_recombine and ok_ranges,
        f"{len(data)} rows, final reward {data[-1]['reward'] if data else 'n/a'}",
    )

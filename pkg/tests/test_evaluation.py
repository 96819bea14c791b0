import numpy as np
import pytest

from llcopt.circuit import PARAM_NAMES, PARAM_RANGES, ValidationError
from llcopt.environment import EpisodeConfig, TargetSpec, power_reward, scale_power_reward, total_reward
from llcopt.evaluation import EvalReport, GridSpec, grid_eval, trace_episode, write_trace_csv
from llcopt.ppo import PpoAgent, PpoConfig

FAST_PPO = PpoConfig(learning_rate=1e-3, batch_episodes=8, minibatch_size=64)
FAST_EPISODE = EpisodeConfig(steps=10)
PAPER_EXAMPLE = TargetSpec(p_t1=140.0, p_t2=4700.0, v_in=450.0, r_load=35.0)


class TestGridSpec:
    def test_default_grid_axes(self):
        grid = GridSpec()
        assert grid.p1_values == (100.0, 150.0, 200.0, 250.0, 300.0)
        assert grid.p2_values == (4000.0, 4250.0, 4500.0, 4750.0, 5000.0)
        assert len(grid.targets()) == 25

    def test_regular_validation(self):
        with pytest.raises(ValidationError):
            GridSpec.regular(0, 5)


class TestGridEval:
    def test_single_cell_single_init(self):
        agent = PpoAgent(config=FAST_PPO, seed=0)
        grid = GridSpec(p1_values=(200.0,), p2_values=(4500.0,))
        report = grid_eval(agent, grid, inits=1, seed=0, episode=FAST_EPISODE)
        assert len(report.cells) == 1
        assert len(report.samples) == 1
        cell, sample = report.cells[0], report.samples[0]
        assert cell["mean_reward"] == sample["reward"]
        assert cell["mean_dp1_pct"] == sample["dp1_pct"]

    def test_cell_means_are_sample_means_exactly(self):
        agent = PpoAgent(config=FAST_PPO, seed=1)
        grid = GridSpec.regular(2, 2)
        report = grid_eval(agent, grid, inits=3, seed=5, episode=FAST_EPISODE)
        assert len(report.samples) == 12
        for cell in report.cells:
            mine = [s for s in report.samples if (s["i"], s["j"]) == (cell["i"], cell["j"])]
            assert len(mine) == 3
            assert cell["mean_reward"] == pytest.approx(
                np.mean([s["reward"] for s in mine]), rel=1e-15
            )
            assert cell["mean_e"] == pytest.approx(
                np.mean([0.5 * (s["e1"] + s["e2"]) for s in mine]), rel=1e-15
            )
            assert cell["mean_dp_pct"] == pytest.approx(
                np.mean([0.5 * (s["dp1_pct"] + s["dp2_pct"]) for s in mine]), rel=1e-12
            )

    def test_json_roundtrip_lossless(self, tmp_path):
        agent = PpoAgent(config=FAST_PPO, seed=2)
        grid = GridSpec(p1_values=(150.0, 250.0), p2_values=(4200.0,))
        report = grid_eval(agent, grid, inits=2, seed=9, episode=FAST_EPISODE)
        clone = EvalReport.from_json(report.to_json())
        assert clone == report
        path = tmp_path / "report.json"
        report.save(path, header={"config_hash": "abc"})
        assert EvalReport.from_json(path.read_text()) == report

    def test_samples_csv(self, tmp_path):
        agent = PpoAgent(config=FAST_PPO, seed=3)
        grid = GridSpec(p1_values=(200.0,), p2_values=(4500.0,))
        report = grid_eval(agent, grid, inits=2, seed=0, episode=FAST_EPISODE)
        path = tmp_path / "samples.csv"
        report.write_samples_csv(path, header_comment="config: deadbeef")
        lines = path.read_text().splitlines()
        assert lines[0] == "# config: deadbeef"
        assert lines[1].startswith("p_t1,p_t2,init,reward")
        assert len(lines) == 4

    def test_empty_grid_rejected(self):
        agent = PpoAgent(config=FAST_PPO, seed=0)
        with pytest.raises(ValidationError):
            grid_eval(agent, GridSpec(p1_values=(), p2_values=()), inits=1, seed=0)


class TestTraceEpisode:
    def test_exactly_n_rows(self):
        agent = PpoAgent(config=FAST_PPO, seed=4)
        rows = trace_episode(agent, PAPER_EXAMPLE, seed=0)
        assert len(rows) == 50
        assert [r["step"] for r in rows] == list(range(1, 51))

    def test_reward_components_recombine_exactly(self):
        agent = PpoAgent(config=FAST_PPO, seed=5)
        rows = trace_episode(agent, PAPER_EXAMPLE, seed=1, episode=FAST_EPISODE)
        threshold = EpisodeConfig().reward_threshold
        for row in rows:
            r_p1 = scale_power_reward(power_reward(row["p_r1"], PAPER_EXAMPLE.p_t1), threshold)
            r_p2 = scale_power_reward(power_reward(row["p_r2"], PAPER_EXAMPLE.p_t2), threshold)
            expected = total_reward(row["e_1"], row["e_2"], r_p1, r_p2)
            assert row["reward"] == expected
            assert row["lost"] == int(r_p1 is None or r_p2 is None)
            assert row["r_e1"] == row["e_1"]
            assert row["r_e2"] == row["e_2"]

    def test_params_in_ranges_and_deterministic(self):
        agent = PpoAgent(config=FAST_PPO, seed=6)
        rows_a = trace_episode(agent, PAPER_EXAMPLE, seed=7, episode=FAST_EPISODE)
        rows_b = trace_episode(agent, PAPER_EXAMPLE, seed=7, episode=FAST_EPISODE)
        assert rows_a == rows_b
        for row in rows_a:
            for name in PARAM_NAMES:
                lo, hi = PARAM_RANGES[name]
                assert lo <= row[name] <= hi

    def test_write_trace_csv(self, tmp_path):
        agent = PpoAgent(config=FAST_PPO, seed=7)
        rows = trace_episode(agent, PAPER_EXAMPLE, seed=2, episode=FAST_EPISODE)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, rows, header_comment="config: cafe")
        lines = path.read_text().splitlines()
        assert lines[0] == "# config: cafe"
        assert lines[1].split(",")[:3] == ["step", "l_r", "l_m"]
        assert len(lines) == 2 + len(rows)

import numpy as np
import pytest

from llcopt.checkpoint import save_checkpoint
from llcopt.circuit import PARAM_NAMES, PARAM_RANGES
from llcopt.cli import main
from llcopt.ppo import PpoAgent, PpoConfig

FAST_YAML = """\
environment:
  steps_per_episode: 8
ppo:
  learning_rate: 1.0e-3
  batch_episodes: 4
  minibatch_size: 32
training:
  episodes: 8
  seeds: [0]
  checkpoint_interval: 1
"""


@pytest.fixture()
def fresh_checkpoint(tmp_path):
    path = tmp_path / "agent.ckpt"
    save_checkpoint(PpoAgent(config=PpoConfig(), seed=0), path)
    return path


@pytest.fixture()
def fast_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(FAST_YAML)
    return path


class TestSimulate:
    def test_lossless_at_resonance_prints_unity_efficiency(self, capsys):
        code = main([
            "simulate", "--lr", "10e-6", "--lm", "50e-6", "--cr", "100e-9",
            "--k", "0.95", "--f", "159154.943", "--vin", "450", "--rload", "35",
            "--lossless",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "efficiency = 1.000000" in out

    def test_invalid_parameter_exits_one(self, capsys):
        code = main([
            "simulate", "--lr=-1e-6", "--lm", "50e-6", "--cr", "100e-9",
            "--k", "0.95", "--f", "60e3", "--vin", "450", "--rload", "35",
        ])
        assert code == 1
        assert "l_r" in capsys.readouterr().err


class TestOptimize:
    def test_paper_example_targets_produce_full_trace(self, tmp_path, capsys, fresh_checkpoint):
        out_dir = tmp_path / "opt"
        code = main([
            "optimize", "--checkpoint", str(fresh_checkpoint),
            "--pt1", "140", "--pt2", "4700", "--seed", "3", "--out", str(out_dir),
        ])
        assert code == 0
        trace = out_dir / "optimize_trace_seed3.csv"
        lines = trace.read_text().splitlines()
        assert lines[0].startswith("# config:")
        assert len(lines) == 2 + 50
        figure = out_dir / "optimize_trace_seed3.png"
        assert figure.exists() and figure.stat().st_size > 1000
        # final parameters stay inside their ranges
        final = dict(zip(lines[1].split(","), lines[-1].split(",")))
        for name in PARAM_NAMES:
            lo, hi = PARAM_RANGES[name]
            assert lo <= float(final[name]) <= hi

    def test_out_of_range_target_exits_one(self, capsys, fresh_checkpoint):
        code = main([
            "optimize", "--checkpoint", str(fresh_checkpoint),
            "--pt1", "50", "--pt2", "4700",
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "p_t1" in err and "100" in err

    def test_missing_checkpoint_exits_two(self, tmp_path, capsys):
        code = main([
            "optimize", "--checkpoint", str(tmp_path / "nope.ckpt"),
            "--pt1", "140", "--pt2", "4700",
        ])
        assert code == 2

    def test_seeded_outputs_reproducible_bytewise(self, tmp_path, fresh_checkpoint):
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert main([
                "optimize", "--checkpoint", str(fresh_checkpoint),
                "--pt1", "200", "--pt2", "4500", "--seed", "9",
                "--out", str(d), "--no-figures",
            ]) == 0
        a = (dirs[0] / "optimize_trace_seed9.csv").read_bytes()
        b = (dirs[1] / "optimize_trace_seed9.csv").read_bytes()
        assert a == b


class TestEvaluate:
    def test_small_grid_writes_report_and_figures(self, tmp_path, capsys, fresh_checkpoint):
        out_dir = tmp_path / "eval"
        code = main([
            "evaluate", "--checkpoint", str(fresh_checkpoint),
            "--grid", "2x2", "--inits", "1", "--seed", "1", "--out", str(out_dir),
        ])
        assert code == 0
        assert (out_dir / "eval_report.json").exists()
        samples = (out_dir / "eval_samples.csv").read_text().splitlines()
        assert len(samples) == 2 + 4
        assert (out_dir / "eval_grid.png").stat().st_size > 1000
        assert (out_dir / "eval_distributions.png").stat().st_size > 1000
        out = capsys.readouterr().out
        assert "mean reward" in out

    def test_bad_grid_spec_exits_one(self, fresh_checkpoint, capsys):
        code = main([
            "evaluate", "--checkpoint", str(fresh_checkpoint), "--grid", "woops",
        ])
        assert code == 1


class TestBaselineCommand:
    def test_random_baseline_appends_csv(self, tmp_path, capsys):
        out = tmp_path / "baselines.csv"
        for seed in ("0", "1"):
            code = main([
                "baseline", "--method", "random", "--budget", "60",
                "--pt1", "200", "--pt2", "4500", "--seed", seed, "--out", str(out),
            ])
            assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# config:")
        assert lines[1].startswith("method,")
        assert len(lines) == 4
        assert all(line.startswith("random,") for line in lines[2:])

    def test_hillclimb_runs(self, capsys):
        code = main([
            "baseline", "--method", "hillclimb", "--budget", "40",
            "--pt1", "150", "--pt2", "4200",
        ])
        assert code == 0
        assert "hillclimb: best reward" in capsys.readouterr().out


class TestTrain:
    def test_tiny_training_run(self, tmp_path, capsys, fast_config):
        out_dir = tmp_path / "run"
        code = main([
            "train", "--config", str(fast_config), "--out", str(out_dir),
        ])
        assert code == 0
        assert (out_dir / "seed_0" / "metrics.csv").exists()
        assert (out_dir / "seed_0" / "final.ckpt").exists()
        assert (out_dir / "metrics_aggregate.csv").exists()
        assert (out_dir / "training_curves.png").stat().st_size > 1000

    def test_flag_overrides_win(self, tmp_path, fast_config):
        out_dir = tmp_path / "run2"
        code = main([
            "train", "--config", str(fast_config), "--out", str(out_dir),
            "--episodes", "4", "--no-figures",
        ])
        assert code == 0
        metrics = (out_dir / "seed_0" / "metrics.csv").read_text().splitlines()
        assert len(metrics) == 3  # comment + header + one batch
        assert not (out_dir / "training_curves.png").exists()


def test_help_names_bounds(capsys):
    with pytest.raises(SystemExit):
        main(["optimize", "--help"])
    out = capsys.readouterr().out
    assert "[100, 300]" in out
    assert "[4000, 5000]" in out
    assert "[400, 500]" in out
    assert "[30, 40]" in out

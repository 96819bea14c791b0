"""Command-line interface: train, optimize, evaluate, simulate, baseline.

Settings come from an optional YAML run configuration; command-line flags
win over the file.  Every report path writes delimited data stamped with
the resolved config hash and, unless --no-figures is given, a rendered
PNG next to it.  Exit codes: 0 success, 1 validation error (a value
outside its admissible range, a malformed config), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .baselines import hill_climb, random_search
from .checkpoint import CheckpointError, load_checkpoint
from .circuit import (
    PARAM_RANGES,
    RLOAD_RANGE,
    VIN_RANGE,
    CircuitParams,
    LossModel,
    ValidationError,
    simulate_operating_point,
)
from .config import RunConfig, as_dict, config_hash, load_run_config
from .environment import TARGET_P1_RANGE, TARGET_P2_RANGE, TargetSpec
from .evaluation import GridSpec, grid_eval, trace_episode, write_trace_csv
from .training import run_training

_FIG_DEPS_NOTE = "renders PNG figures alongside the CSV/JSON output"


def _bounds(pair) -> str:
    return f"[{pair[0]:g}, {pair[1]:g}]"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llcopt",
        description="LLC converter parameter tuning with a pre-trained policy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help=f"train one or more agents; {_FIG_DEPS_NOTE}")
    train.add_argument("--config", type=Path, help="YAML run configuration")
    train.add_argument("--out", type=Path, required=True, help="output directory")
    train.add_argument("--seeds", type=int, help="train this many seeds (0..n-1), overriding the config")
    train.add_argument("--episodes", type=int, help="episodes per seed, overriding the config")
    train.add_argument("--workers", type=int, help="rollout worker threads")
    train.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    optimize = sub.add_parser(
        "optimize", help=f"tune a converter for one target with a trained policy; {_FIG_DEPS_NOTE}"
    )
    optimize.add_argument("--checkpoint", type=Path, required=True)
    optimize.add_argument("--config", type=Path, help="YAML run configuration")
    optimize.add_argument("--pt1", type=float, required=True,
                          help=f"target power 1 (W), {_bounds(TARGET_P1_RANGE)}")
    optimize.add_argument("--pt2", type=float, required=True,
                          help=f"target power 2 (W), {_bounds(TARGET_P2_RANGE)}")
    optimize.add_argument("--vin", type=float, default=450.0,
                          help=f"input voltage (V), {_bounds(VIN_RANGE)}")
    optimize.add_argument("--rl", type=float, default=35.0,
                          help=f"load resistance (ohm), {_bounds(RLOAD_RANGE)}")
    optimize.add_argument("--seed", type=int, default=0, help="parameter-initialization seed")
    optimize.add_argument("--out", type=Path, default=Path("."), help="trace output directory")
    optimize.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    evaluate = sub.add_parser(
        "evaluate", help=f"grid evaluation of a trained policy; {_FIG_DEPS_NOTE}"
    )
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument("--config", type=Path, help="YAML run configuration")
    evaluate.add_argument("--grid", default="5x5", help="grid size as N1xN2 (default 5x5)")
    evaluate.add_argument("--inits", type=int, default=5, help="episodes per grid cell")
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--vin", type=float, default=450.0,
                          help=f"input voltage (V), {_bounds(VIN_RANGE)}")
    evaluate.add_argument("--rl", type=float, default=35.0,
                          help=f"load resistance (ohm), {_bounds(RLOAD_RANGE)}")
    evaluate.add_argument("--out", type=Path, default=Path("."), help="report output directory")
    evaluate.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    simulate = sub.add_parser("simulate", help="one operating point of the converter model")
    simulate.add_argument("--lr", type=float, required=True,
                          help=f"resonant inductance (H), {_bounds(PARAM_RANGES['l_r'])}")
    simulate.add_argument("--lm", type=float, required=True,
                          help=f"main inductance (H), {_bounds(PARAM_RANGES['l_m'])}")
    simulate.add_argument("--cr", type=float, required=True,
                          help=f"resonant capacitance (F), {_bounds(PARAM_RANGES['c_r'])}")
    simulate.add_argument("--k", type=float, required=True,
                          help=f"coupling factor, {_bounds(PARAM_RANGES['k'])}")
    simulate.add_argument("--f", type=float, required=True,
                          help=f"switching frequency (Hz), {_bounds((10e3, 100e3))}")
    simulate.add_argument("--vin", type=float, required=True,
                          help=f"input voltage (V), {_bounds(VIN_RANGE)}")
    simulate.add_argument("--rload", type=float, required=True,
                          help=f"load resistance (ohm), {_bounds(RLOAD_RANGE)}")
    simulate.add_argument("--config", type=Path, help="YAML run configuration (loss model)")
    simulate.add_argument("--lossless", action="store_true", help="zero all branch resistances")

    baseline = sub.add_parser("baseline", help="derivative-free reference optimizers")
    baseline.add_argument("--method", choices=("random", "hillclimb"), required=True)
    baseline.add_argument("--budget", type=int, required=True, help="number of evaluations")
    baseline.add_argument("--pt1", type=float, required=True,
                          help=f"target power 1 (W), {_bounds(TARGET_P1_RANGE)}")
    baseline.add_argument("--pt2", type=float, required=True,
                          help=f"target power 2 (W), {_bounds(TARGET_P2_RANGE)}")
    baseline.add_argument("--vin", type=float, default=450.0,
                          help=f"input voltage (V), {_bounds(VIN_RANGE)}")
    baseline.add_argument("--rl", type=float, default=35.0,
                          help=f"load resistance (ohm), {_bounds(RLOAD_RANGE)}")
    baseline.add_argument("--seed", type=int, default=0)
    baseline.add_argument("--step-frac", type=float, default=0.05,
                          help="hill-climb step size as a fraction of each range, (0, 0.1]")
    baseline.add_argument("--config", type=Path, help="YAML run configuration")
    baseline.add_argument("--out", type=Path, help="append result to this CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValidationError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    handler = {
        "train": _cmd_train,
        "optimize": _cmd_optimize,
        "evaluate": _cmd_evaluate,
        "simulate": _cmd_simulate,
        "baseline": _cmd_baseline,
    }[args.command]
    return handler(args)


def _load_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    if getattr(args, "episodes", None) is not None:
        overrides["episodes"] = args.episodes
    if getattr(args, "seeds", None) is not None:
        overrides["seeds"] = tuple(range(args.seeds))
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = RunConfig(**{**_cfg_kwargs(cfg), **overrides})
    cfg.validate()
    return cfg


def _cfg_kwargs(cfg: RunConfig) -> dict:
    return {
        "episodes": cfg.episodes,
        "seeds": cfg.seeds,
        "workers": cfg.workers,
        "checkpoint_interval": cfg.checkpoint_interval,
        "ppo": cfg.ppo,
        "episode": cfg.episode,
        "loss": cfg.loss,
    }


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    summary = run_training(cfg, args.out)
    for seed, path in summary["checkpoints"].items():
        rows = summary["metrics"][seed]
        final = rows[-1]["reward_mean"] if rows else float("nan")
        print(f"seed {seed}: final batch reward mean {final:.4f} -> {path}")
    print(f"aggregate metrics: {summary['aggregate_path']}")
    if not args.no_figures and summary["metrics"] and any(summary["metrics"].values()):
        from .plots import save_training_figure

        fig_path = Path(args.out) / "training_curves.png"
        save_training_figure(summary["metrics"], fig_path)
        print(f"figure: {fig_path}")
    return 0


def _cmd_optimize(args) -> int:
    cfg = _load_config(args)
    target = TargetSpec(p_t1=args.pt1, p_t2=args.pt2, v_in=args.vin, r_load=args.rl)
    target.validate()
    agent, _ = load_checkpoint(args.checkpoint)
    rows = trace_episode(agent, target, seed=args.seed, episode=cfg.episode, loss=cfg.loss)
    args.out.mkdir(parents=True, exist_ok=True)
    trace_path = args.out / f"optimize_trace_seed{args.seed}.csv"
    write_trace_csv(trace_path, rows, header_comment=f"config: {config_hash(cfg)}")

    final = rows[-1]
    print(f"optimized parameters after {len(rows)} steps "
          f"(targets {target.p_t1:g} W / {target.p_t2:g} W at "
          f"{target.v_in:g} V, {target.r_load:g} ohm):")
    print(f"  l_r = {final['l_r']:.6e} H")
    print(f"  l_m = {final['l_m']:.6e} H")
    print(f"  c_r = {final['c_r']:.6e} F")
    print(f"  k   = {final['k']:.6f}")
    print(f"  f_1 = {final['f_1']:.1f} Hz")
    print(f"  f_2 = {final['f_2']:.1f} Hz")
    print(f"achieved powers: {final['p_r1']:.1f} W, {final['p_r2']:.1f} W")
    print(f"efficiencies: {final['e_1']:.4f}, {final['e_2']:.4f}")
    print(f"episode reward: {final['reward']:.4f}")
    print(f"trace: {trace_path}")
    if not args.no_figures:
        from .plots import save_trace_figure

        fig_path = args.out / f"optimize_trace_seed{args.seed}.png"
        save_trace_figure(rows, target.p_t1, target.p_t2, fig_path)
        print(f"figure: {fig_path}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    try:
        n1, n2 = (int(part) for part in args.grid.lower().split("x"))
    except ValueError:
        raise ValidationError(f"--grid must look like 5x5, got {args.grid!r}")
    grid = GridSpec.regular(n1, n2, v_in=args.vin, r_load=args.rl)
    agent, _ = load_checkpoint(args.checkpoint)
    report = grid_eval(agent, grid, inits=args.inits, seed=args.seed,
                       episode=cfg.episode, loss=cfg.loss)
    args.out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    json_path = args.out / "eval_report.json"
    csv_path = args.out / "eval_samples.csv"
    report.save(json_path, header={"config": as_dict(cfg), "config_hash": digest})
    report.write_samples_csv(csv_path, header_comment=f"config: {digest}")
    print(f"grid {n1}x{n2}, {args.inits} inits per cell "
          f"({len(report.samples)} episodes):")
    print(f"  mean reward          {report.mean_reward():.4f}")
    print(f"  mean power deviation {report.mean_power_deviation_pct():.2f} %")
    print(f"  mean efficiency      {100 * report.mean_efficiency():.2f} %")
    print(f"report: {json_path}")
    print(f"samples: {csv_path}")
    if not args.no_figures:
        from .plots import save_distribution_figure, save_grid_figure

        grid_fig = args.out / "eval_grid.png"
        dist_fig = args.out / "eval_distributions.png"
        save_grid_figure(report, grid_fig)
        save_distribution_figure(report, dist_fig)
        print(f"figures: {grid_fig}, {dist_fig}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    loss = LossModel(0.0, 0.0, 0.0) if args.lossless else cfg.loss
    params = CircuitParams(
        l_r=args.lr, l_m=args.lm, c_r=args.cr, k=args.k,
        f_1=min(args.f, 50e3), f_2=max(args.f, 50e3),
        v_in=args.vin, r_load=args.rload,
    )
    params.validate()
    result = simulate_operating_point(params, args.f, loss)
    print(f"f = {result.f:.1f} Hz")
    print(f"output power = {result.p_r:.3f} W")
    print(f"efficiency = {result.e:.6f}")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _load_config(args)
    target = TargetSpec(p_t1=args.pt1, p_t2=args.pt2, v_in=args.vin, r_load=args.rl)
    target.validate()
    if args.method == "random":
        result = random_search(target, args.budget, seed=args.seed,
                               loss=cfg.loss, episode=cfg.episode)
    else:
        result = hill_climb(target, args.budget, step_frac=args.step_frac,
                            seed=args.seed, loss=cfg.loss, episode=cfg.episode)
    best = result.best_params
    op_1 = simulate_operating_point(best, best.f_1, cfg.loss)
    op_2 = simulate_operating_point(best, best.f_2, cfg.loss)
    print(f"{args.method}: best reward {result.best_reward:.4f} "
          f"after {result.evaluations_used} evaluations")
    print(f"  powers {op_1.p_r:.1f} W / {op_2.p_r:.1f} W, "
          f"efficiencies {op_1.e:.4f} / {op_2.e:.4f}")
    if args.out:
        _append_baseline_csv(args, cfg, result, target, op_1, op_2)
        print(f"appended: {args.out}")
    return 0


def _append_baseline_csv(args, cfg, result, target, op_1, op_2) -> None:
    import csv

    new_file = not args.out.exists()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            fh.write(f"# config: {config_hash(cfg)}\n")
            writer.writerow(("method",) + tuple(
                c for c in ("p_t1", "p_t2", "init", "reward", "dp1_pct", "dp2_pct", "e1", "e2")
            ) + ("evaluations",))
        writer.writerow([
            args.method,
            repr(target.p_t1), repr(target.p_t2), args.seed,
            repr(result.best_reward),
            repr(100.0 * abs(op_1.p_r - target.p_t1) / target.p_t1),
            repr(100.0 * abs(op_2.p_r - target.p_t2) / target.p_t2),
            repr(op_1.e), repr(op_2.e),
            result.evaluations_used,
        ])


if __name__ == "__main__":
    sys.exit(main())

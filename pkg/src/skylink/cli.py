"""Command-line entry point.

Subcommands: generate-scenario, train, evaluate, compare, rate-trace.
Long flags may be defaulted through SKYLINK_<FLAG> environment variables
(e.g. SKYLINK_SEED, SKYLINK_EPISODES, SKYLINK_JOBS).  Exit codes: 0 success,
1 usage error, 2 runtime error.

Every command writes a manifest echoing its argv and effective parameters;
re-running a command with the manifest's argv reproduces the outputs
bit-identically (no timestamps anywhere in the outputs).
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

from . import __version__
from .channel import ChannelMap
from .environment import EpisodeConfig
from .experiments import (THRESHOLD_PRESETS, aggregate_comparison,
                          episode_config, evaluation_seed, failure_pct,
                          failure_stderr, empirical_cdf, rate_trace,
                          switch_counts, write_episodes_csv,
                          write_failures_csv, write_rate_trace_csv,
                          write_switch_cdf_csv, write_trace_csv)
from .policies import (POLICY_LABELS, HyperParams, evaluate, load_policy,
                       run_training, save_policy)
from .scenario import (ScenarioConfig, generate_scenario, load_scenario,
                       save_scenario, scenario_digest)

LEARNING_CURVE_COLUMNS = ["episode", "return", "failures", "switches", "steps"]


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _env(name: str, cast=str):
    raw = os.environ.get(f"SKYLINK_{name}")
    return None if raw is None else cast(raw)


def _parse_point(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,h")
    return tuple(parts)  # type: ignore[return-value]


def _parse_seeds(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _parse_hidden(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _preset(name: str):
    if name not in THRESHOLD_PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose one of "
                         f"{sorted(THRESHOLD_PRESETS)}")
    return THRESHOLD_PRESETS[name]


def _write_manifest(out_dir: str, stem: str, command: str, argv: list[str],
                    effective: dict) -> None:
    doc = {"schema": 1, "tool": "skylink", "version": __version__,
           "command": command, "argv": argv, "effective": effective}
    path = os.path.join(out_dir, f"{stem}manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in columns})


# -- generate-scenario --------------------------------------------------------

def cmd_generate_scenario(args, argv) -> int:
    config = ScenarioConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = ScenarioConfig(**json.load(fh))
    if args.buildings_per_km2 is not None:
        config = replace(config, buildings_per_km2=args.buildings_per_km2)
    scenario = generate_scenario(config, args.seed)
    save_scenario(scenario, args.out)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    _write_manifest(out_dir, os.path.basename(args.out) + ".",
                    "generate-scenario", argv,
                    {"config": asdict(config), "seed": args.seed,
                     "digest": scenario_digest(scenario)})
    print(f"wrote {args.out} ({len(scenario.buildings)} buildings, "
          f"{len(scenario.sites)} sites)")
    return 0


# -- train ---------------------------------------------------------------------

def _hyper_from_args(args) -> HyperParams:
    hyper = HyperParams()
    overrides = {}
    if args.episodes is not None:
        overrides["max_episodes"] = args.episodes
    for name in ("lr", "epsilon", "batch_size", "capacity", "warmup",
                 "sync_period", "min_gradient_steps", "plateau_window",
                 "plateau_rel_tol", "hidden"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(hyper, **overrides)


def _config_from_args(args, scenario, preset) -> EpisodeConfig:
    overrides = {}
    if args.dest is not None:
        overrides["q_dest"] = args.dest
    if args.start is not None:
        overrides["q_start"] = args.start
    if args.max_steps is not None:
        overrides["max_steps"] = args.max_steps
    if getattr(args, "deterministic_fading", False):
        overrides["deterministic_fading"] = True
    return episode_config(scenario, preset, **overrides)


def _checkpoint_stem(label: str, preset_name: str, seed: int) -> str:
    return f"{label}_{preset_name}_s{seed}"


def cmd_train(args, argv) -> int:
    scenario = load_scenario(args.scenario)
    preset = _preset(args.preset)
    if args.policy not in POLICY_LABELS:
        raise ValueError(f"invalid policy {args.policy!r}; choose one of "
                         f"{POLICY_LABELS}")
    hyper = _hyper_from_args(args)
    config = _config_from_args(args, scenario, preset)
    policy, curve = run_training(args.policy, scenario, config, hyper,
                                 args.seed)
    policy.meta["preset"] = args.preset

    os.makedirs(args.out_dir, exist_ok=True)
    stem = _checkpoint_stem(args.policy, args.preset, args.seed)
    ckpt = os.path.join(args.out_dir, f"{stem}.json")
    save_policy(ckpt, policy)
    _write_csv(os.path.join(args.out_dir, f"{stem}_learning_curve.csv"),
               LEARNING_CURVE_COLUMNS, curve)
    _write_manifest(args.out_dir, f"{stem}_", "train", argv, {
        "policy": args.policy, "preset": args.preset, "seed": args.seed,
        "scenario": args.scenario,
        "scenario_digest": scenario_digest(scenario),
        "hyper": asdict(hyper), "episode_config": asdict(config),
        "episodes_run": len(curve),
        "gradient_steps": policy.meta["gradient_steps"],
    })
    print(f"trained {args.policy}/{args.preset} seed {args.seed}: "
          f"{len(curve)} episodes, {policy.meta['gradient_steps']} gradient "
          f"steps -> {ckpt}")
    return 0


# -- evaluate -------------------------------------------------------------------

def cmd_evaluate(args, argv) -> int:
    scenario = load_scenario(args.scenario)
    policy = load_policy(args.checkpoint)
    preset_name = args.preset or policy.meta.get("preset", "T1")
    preset = _preset(preset_name)
    config = _config_from_args(args, scenario, preset)
    records = evaluate(policy, scenario, config, args.episodes, args.seed)

    os.makedirs(args.out_dir, exist_ok=True)
    episode_rows = [{
        "policy": policy.label, "preset": preset_name, "seed": args.seed,
        "episode": r.index, "steps": r.n_steps, "failures": r.failures,
        "switches": r.switches, "success": int(r.success),
        "episode_return": r.episode_return} for r in records]
    write_episodes_csv(os.path.join(args.out_dir, "episodes.csv"),
                       episode_rows)
    failures_rows = []
    if records:
        failures_rows.append({
            "policy": policy.label, "preset": preset_name, "seed": args.seed,
            "mean_failure_pct": failure_pct(records),
            "stderr": failure_stderr(records)})
    write_failures_csv(os.path.join(args.out_dir, "failures.csv"),
                       failures_rows)
    cdf_rows = [{"policy": policy.label, "preset": preset_name,
                 "switch_count": v, "cdf": c}
                for v, c in empirical_cdf(switch_counts(records))]
    write_switch_cdf_csv(os.path.join(args.out_dir, "switch_cdf.csv"),
                         cdf_rows)
    if args.traces:
        tdir = os.path.join(args.out_dir, "traces")
        os.makedirs(tdir, exist_ok=True)
        for r in records:
            write_trace_csv(os.path.join(tdir, f"episode_{r.index:04d}.csv"), r)
    _write_manifest(args.out_dir, "", "evaluate", argv, {
        "checkpoint": args.checkpoint, "policy": policy.label,
        "preset": preset_name, "seed": args.seed, "episodes": args.episodes,
        "scenario": args.scenario,
        "scenario_digest": scenario_digest(scenario),
    })
    print(f"evaluated {policy.label}/{preset_name}: {len(records)} episodes "
          f"-> {args.out_dir}")
    return 0


# -- compare --------------------------------------------------------------------

@functools.lru_cache(maxsize=4)
def _worker_scenario(path: str):
    scenario = load_scenario(path)
    return scenario, ChannelMap(scenario)


def _eval_cell(task) -> tuple[tuple[str, str, int], list]:
    """Worker: evaluate one (label, preset, seed) cell from its checkpoint."""
    (scenario_path, ckpt_path, label, preset_name, tseed, episodes,
     seed, overrides) = task
    scenario, chanmap = _worker_scenario(scenario_path)
    policy = load_policy(ckpt_path)
    cfg = episode_config(scenario, _preset(preset_name), **overrides)
    records = evaluate(policy, scenario, cfg, episodes,
                       seed=evaluation_seed(seed, label, preset_name, tseed),
                       chanmap=chanmap)
    return (label, preset_name, tseed), records


def cmd_compare(args, argv) -> int:
    scenario = load_scenario(args.scenario)  # validates the file up front
    labels = args.policies.split(",") if args.policies else \
        ["smart", "blind", "optimal"]
    presets = [p for p in (args.presets.split(",") if args.presets
                           else ["T1", "T2", "T3"])]
    for name in presets:
        _preset(name)
    tasks = []
    for label in labels:
        for pname in presets:
            for tseed in args.seeds:
                stem = _checkpoint_stem(label, pname, tseed)
                ckpt = os.path.join(args.checkpoints_dir, f"{stem}.json")
                if not os.path.exists(ckpt):
                    raise FileNotFoundError(
                        f"missing checkpoint for cell (policy={label}, "
                        f"preset={pname}, seed={tseed}): {ckpt}")
                tasks.append((args.scenario, ckpt, label, pname, tseed,
                              args.episodes, args.seed, {}))

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_eval_cell, tasks))
    else:
        results = [_eval_cell(t) for t in tasks]
    records_by_cell = dict(results)
    result = aggregate_comparison(records_by_cell)

    os.makedirs(args.out_dir, exist_ok=True)
    write_failures_csv(os.path.join(args.out_dir, "failures.csv"),
                       result.failures_rows)
    write_switch_cdf_csv(os.path.join(args.out_dir, "switch_cdf.csv"),
                         result.cdf_rows)
    write_episodes_csv(os.path.join(args.out_dir, "episodes.csv"),
                       result.episode_rows)
    _write_manifest(args.out_dir, "", "compare", argv, {
        "policies": labels, "presets": presets, "seeds": args.seeds,
        "episodes": args.episodes, "seed": args.seed,
        "checkpoints_dir": args.checkpoints_dir,
        "scenario": args.scenario,
        "scenario_digest": scenario_digest(scenario),
    })
    for (label, pname), agg in sorted(result.summary.items()):
        print(f"{label:8s} {pname}: failure% {agg['mean_failure_pct']:.2f} "
              f"+/- {agg['stderr_across_seeds']:.2f}, "
              f"switches {agg['mean_switches']:.2f}, "
              f"success {agg['success_rate']:.2f}")
    return 0


# -- rate-trace -------------------------------------------------------------------

def cmd_rate_trace(args, argv) -> int:
    scenario = load_scenario(args.scenario)
    policy = load_policy(args.checkpoint)
    preset_name = args.preset or policy.meta.get("preset", "T1")
    config = _config_from_args(args, scenario, _preset(preset_name))
    rows = rate_trace(policy, scenario, config, args.seed)
    write_rate_trace_csv(args.out, rows)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    _write_manifest(out_dir, os.path.basename(args.out) + ".",
                    "rate-trace", argv, {
                        "checkpoint": args.checkpoint, "policy": policy.label,
                        "preset": preset_name, "seed": args.seed,
                        "scenario": args.scenario,
                        "scenario_digest": scenario_digest(scenario),
                    })
    print(f"wrote {args.out} ({len(rows)} steps)")
    return 0


# -- parser ----------------------------------------------------------------------

def _add_common_eval_args(p) -> None:
    p.add_argument("--scenario", default=_env("SCENARIO"),
                   required=_env("SCENARIO") is None,
                   help="scenario file produced by generate-scenario")
    p.add_argument("--seed", type=int, default=_env("SEED", int),
                   required=_env("SEED") is None)
    p.add_argument("--preset", default=None,
                   help="threshold preset (T1|T2|T3); defaults to the "
                        "checkpoint header where applicable")
    p.add_argument("--dest", type=_parse_point, default=None,
                   help="destination grid point as x,y,h")
    p.add_argument("--start", type=_parse_point, default=None,
                   help="fixed start grid point as x,y,h (default: random)")
    p.add_argument("--max-steps", type=int, default=None, dest="max_steps")
    p.add_argument("--deterministic-fading", action="store_true",
                   dest="deterministic_fading",
                   help="freeze fading at its unit mean (diagnostics)")


def build_parser() -> _Parser:
    parser = _Parser(prog="skylink",
                     description="Dual-band UAV network simulator with DDQN "
                                 "band-switch agents")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    g = sub.add_parser("generate-scenario", help="generate and save a world")
    g.add_argument("--config", default=None, help="JSON ScenarioConfig file")
    g.add_argument("--seed", type=int, default=_env("SEED", int),
                   required=_env("SEED") is None)
    g.add_argument("--out", default=_env("OUT"),
                   required=_env("OUT") is None)
    g.add_argument("--buildings-per-km2", type=float, default=None,
                   dest="buildings_per_km2")
    g.set_defaults(func=cmd_generate_scenario)

    t = sub.add_parser("train", help="train a policy with DDQN")
    _add_common_eval_args(t)
    t.add_argument("--policy", required=True,
                   help=f"one of {', '.join(POLICY_LABELS)}")
    t.add_argument("--out-dir", dest="out_dir", default=_env("OUT_DIR"),
                   required=_env("OUT_DIR") is None)
    t.add_argument("--episodes", type=int,
                   default=_env("EPISODES", int),
                   help="maximum training episodes")
    t.add_argument("--hidden", type=_parse_hidden, default=None,
                   help="hidden layer widths, e.g. 128,128,128,128")
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--epsilon", type=float, default=None)
    t.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    t.add_argument("--capacity", type=int, default=None)
    t.add_argument("--warmup", type=int, default=None)
    t.add_argument("--sync-period", type=int, default=None,
                   dest="sync_period")
    t.add_argument("--min-gradient-steps", type=int, default=None,
                   dest="min_gradient_steps")
    t.add_argument("--plateau-window", type=int, default=None,
                   dest="plateau_window")
    t.add_argument("--plateau-rel-tol", type=float, default=None,
                   dest="plateau_rel_tol")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="greedy evaluation of a checkpoint")
    _add_common_eval_args(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--episodes", type=int, default=_env("EPISODES", int),
                   required=_env("EPISODES") is None)
    e.add_argument("--out-dir", dest="out_dir", default=_env("OUT_DIR"),
                   required=_env("OUT_DIR") is None)
    e.add_argument("--traces", action="store_true",
                   help="also write per-episode step traces")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare",
                       help="evaluate the policy x preset grid from "
                            "checkpoints")
    c.add_argument("--scenario", default=_env("SCENARIO"),
                   required=_env("SCENARIO") is None)
    c.add_argument("--checkpoints-dir", dest="checkpoints_dir", required=True)
    c.add_argument("--seeds", type=_parse_seeds, required=True,
                   help="training seeds, e.g. 1,2,3")
    c.add_argument("--seed", type=int, default=_env("SEED", int),
                   required=_env("SEED") is None,
                   help="evaluation seed")
    c.add_argument("--episodes", type=int, default=_env("EPISODES", int),
                   required=_env("EPISODES") is None)
    c.add_argument("--out-dir", dest="out_dir", default=_env("OUT_DIR"),
                   required=_env("OUT_DIR") is None)
    c.add_argument("--policies", default=None,
                   help="comma list (default smart,blind,optimal)")
    c.add_argument("--presets", default=None,
                   help="comma list (default T1,T2,T3)")
    c.add_argument("--jobs", type=int, default=_env("JOBS", int) or 1)
    c.set_defaults(func=cmd_compare)

    r = sub.add_parser("rate-trace",
                       help="log one episode's dual-band rates")
    _add_common_eval_args(r)
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--out", default=_env("OUT"),
                   required=_env("OUT") is None)
    r.set_defaults(func=cmd_rate_trace)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"skylink: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands: train (run experiments), analyze (mine exploit reports),
curve (learning-curve CSV), serve-mock (wire-protocol mock grader), and
probe (greedy single-response rollout with a trained policy).

Exit codes: 0 success, 2 validation failure, 3 runtime failure. The
GRADE_PROBE_LOG_LEVEL environment variable controls logging verbosity.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime as dt
import json
import logging
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    EpisodeLogWriter,
    EpisodeRenderer,
    build_report,
    expand_log_glob,
    learning_curve,
    read_episode_log,
    write_curve_csv,
    write_report,
)
from .config import (
    CONFIG_SCHEMA_VERSION,
    MANIFEST_SCHEMA,
    ResolvedConfig,
    load_config,
    run_seed_for,
)
from .env import (
    ActionKind,
    EpisodeLimits,
    InsertLocation,
    RewardSpec,
    expected_rating,
    run_episode,
)
from .errors import ConfigValidationError, GradeProbeError
from .grader import GraderBinding, build_grader
from .policy import default_featurizer, load_policy, make_greedy_policy, save_policy
from .ppo import TrainDeps, train_run
from .presets import get_preset
from .server import serve_mock

log = logging.getLogger("gradeprobe")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def default_responses_path() -> Path:
    return Path(str(resources.files("gradeprobe").joinpath("data/seed_responses.txt")))


def load_seed_responses(path: Path) -> tuple[str, ...]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigValidationError(f"cannot read seed responses {path}: {exc}") from exc
    responses = tuple(line.strip() for line in lines if line.strip())
    if not responses:
        raise ConfigValidationError(f"{path}: no seed responses found")
    return responses


def _train_deps(cfg: ResolvedConfig, responses: tuple[str, ...]) -> TrainDeps:
    preset = get_preset(cfg.experiment)
    featurizer = default_featurizer(
        preset.phrases,
        include_step_feature=cfg.step_feature,
        max_steps=cfg.limits.max_steps,
    )
    return TrainDeps(
        phrases=preset.phrases,
        featurizer=featurizer,
        grader=build_grader(cfg.grader),
        seed_responses=responses,
        limits=cfg.limits,
        reward_spec=cfg.reward,
        ppo=cfg.ppo,
    )


def _train_single_run(args: tuple) -> dict:
    """Execute one training run and write its log + policy files.

    Top-level so it can cross a process boundary for --parallel.
    """
    config_raw, responses_path, out_dir, run_id = args
    from .config import resolve_config  # local import keeps workers cheap

    cfg = resolve_config(config_raw)
    responses = load_seed_responses(Path(responses_path))
    deps = _train_deps(cfg, responses)
    seed = run_seed_for(cfg.run.rng_seed, run_id)

    out = Path(out_dir)
    log_path = out / f"run_{run_id:02d}.jsonl"
    policy_path = out / f"policy_run_{run_id:02d}.json"
    started = time.time()
    with EpisodeLogWriter(log_path, cfg.experiment, run_id) as writer:
        params = train_run(
            deps,
            total_timesteps=cfg.run.total_timesteps,
            run_seed=seed,
            experiment_id=cfg.experiment,
            run_id=run_id,
            episode_sink=writer.append,
        )
    save_policy(policy_path, params, deps.featurizer, cfg.experiment, seed)
    return {
        "run_id": run_id,
        "rng_seed": seed,
        "log_path": str(log_path),
        "policy_path": str(policy_path),
        "duration_seconds": time.time() - started,
    }


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    responses_path = Path(args.responses) if args.responses else default_responses_path()
    load_seed_responses(responses_path)  # fail fast on a bad file

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started_at = dt.datetime.now(dt.timezone.utc)

    jobs = [
        (cfg.raw, str(responses_path), str(out_dir), run_id)
        for run_id in range(cfg.run.num_runs)
    ]
    # A grader failure aborts here with partial logs left on disk.
    run_entries: list[dict] = []
    if args.parallel and cfg.run.num_runs > 1:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(cfg.run.num_runs, os.cpu_count() or 1)
        ) as pool:
            for entry in pool.map(_train_single_run, jobs):
                run_entries.append(entry)
                log.info("finished run %d", entry["run_id"])
    else:
        for job in jobs:
            entry = _train_single_run(job)
            run_entries.append(entry)
            log.info("finished run %d", entry["run_id"])
    finished_at = dt.datetime.now(dt.timezone.utc)

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": 1,
        "config_schema_version": CONFIG_SCHEMA_VERSION,
        "software_version": __version__,
        "config": cfg.raw,
        "seed_responses_path": str(responses_path),
        "runs": run_entries,
        "started_at": started_at.isoformat(),
        "finished_at": finished_at.isoformat(),
        "duration_seconds": (finished_at - started_at).total_seconds(),
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    print(f"wrote {len(run_entries)} run log(s) and {manifest_path}")
    return EXIT_OK


def _load_runs(pattern: str) -> list[tuple[dict, list]]:
    return [read_episode_log(path) for path in expand_log_glob(pattern)]


def cmd_analyze(args: argparse.Namespace) -> int:
    if not 0 < args.top_pct <= 1:
        raise ConfigValidationError("--top-pct: must lie in (0, 1]")
    runs = _load_runs(args.logs)

    by_experiment: dict[int, list] = {}
    for header, records in runs:
        by_experiment.setdefault(header["experiment_id"], []).extend(records)
    if len(by_experiment) > 1 and not args.per_experiment:
        ids = sorted(by_experiment)
        raise ConfigValidationError(
            f"logs span experiments {ids}; pass --per-experiment to analyze them separately"
        )

    report_path = Path(args.report)
    for experiment_id, episodes in sorted(by_experiment.items()):
        preset = get_preset(experiment_id)
        report = build_report(episodes, preset, top_fraction=args.top_pct)
        if len(by_experiment) > 1:
            path = report_path.with_name(
                f"{report_path.stem}.exp{experiment_id}{report_path.suffix or '.json'}"
            )
        else:
            path = report_path
        write_report(report, path)
        print(f"experiment {experiment_id}: analyzed {report.n_episodes_analyzed} of "
              f"{report.n_episodes_total} episodes -> {path}")
        if not args.no_figure:
            from .figures import save_report_figure

            figure_path = path.with_suffix(".png")
            save_report_figure(report, figure_path)
            print(f"wrote {figure_path}")
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    if args.window < 1:
        raise ConfigValidationError("--window: must be >= 1")
    runs = _load_runs(args.logs)
    lengths = [len(records) for _, records in runs]
    episodes_per_run = min(lengths)
    if episodes_per_run == 0:
        raise GradeProbeError("a matched log contains no episodes")
    if len(set(lengths)) > 1:
        log.warning(
            "runs have unequal lengths %s; truncating to %d episodes", lengths, episodes_per_run
        )
    returns = [[r.episode_return for r in records] for _, records in runs]
    curve = learning_curve(returns, args.window, episodes_per_run)
    if curve.degenerate_band:
        log.warning("single run: confidence band collapses to the mean")
    write_curve_csv(curve, args.out)
    print(f"wrote {len(curve.mean)} curve rows -> {args.out}")
    if not args.no_figure:
        from .figures import save_curve_figure

        figure_path = Path(args.out).with_suffix(".png")
        experiments = sorted({header["experiment_id"] for header, _ in runs})
        save_curve_figure(
            curve, figure_path,
            title=f"experiment {', '.join(map(str, experiments))}: {curve.n_runs} run(s)",
        )
        print(f"wrote {figure_path}")
    return EXIT_OK


def cmd_serve_mock(args: argparse.Namespace) -> int:
    try:
        serve_mock(args.port, args.host)
    except OSError as exc:
        raise GradeProbeError(f"cannot bind port {args.port}: {exc}") from exc
    return EXIT_OK


def cmd_probe(args: argparse.Namespace) -> int:
    if not args.response.strip():
        raise ConfigValidationError("--response: must not be empty")
    loaded = load_policy(args.policy)
    preset = get_preset(loaded.experiment_id)
    if len(loaded.featurizer.inventory) != preset.inventory_size:
        raise ConfigValidationError(
            f"policy inventory has {len(loaded.featurizer.inventory)} phrases but preset "
            f"{preset.id} has {preset.inventory_size}"
        )
    if args.grader == "mock":
        binding = GraderBinding(kind="mock")
    else:
        binding = GraderBinding(kind="remote", endpoint=args.grader)
    grader = build_grader(binding)

    policy = make_greedy_policy(loaded.params, loaded.featurizer)
    record = run_episode(
        args.response,
        policy,
        grader,
        loaded.featurizer.inventory,
        limits=EpisodeLimits(),
        reward_spec=RewardSpec(),
        rng=np.random.default_rng(0),  # greedy policy ignores the rng
        experiment_id=loaded.experiment_id,
    )

    print(f"seed: {record.initial_text}")
    renderer = EpisodeRenderer(record.initial_text)
    for i, transition in enumerate(record.transitions, start=1):
        renderer.apply(transition.action, loaded.featurizer.inventory)
        label = _describe_action(transition.action, loaded.featurizer.inventory)
        print(f"step {i}: {label}")
        print(f"  text: {renderer.rendered()}")
        print(f"  expected rating: {expected_rating(transition.rating):.4f}")
    print(f"termination: {record.termination.value}  return: {record.episode_return:.4f}")
    return EXIT_OK


def _describe_action(action, phrases) -> str:
    if action.kind is ActionKind.INSERT:
        side = "front" if action.location is InsertLocation.FRONT else "end"
        return f'insert "{phrases[action.phrase_index]}" at {side}'
    return f"delete segment {action.segment_index}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grade-probe",
        description="Audit an automatic short-answer grader with a revision agent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run training per a JSON config")
    p_train.add_argument("--config", required=True, help="path to the JSON config")
    p_train.add_argument("--out", required=True, help="output directory for logs and manifest")
    p_train.add_argument("--responses", help="override the shipped seed-response file")
    p_train.add_argument("--parallel", action="store_true", help="fan runs out across processes")
    p_train.set_defaults(func=cmd_train)

    p_analyze = sub.add_parser("analyze", help="mine exploit statistics from episode logs")
    p_analyze.add_argument("--logs", required=True, help="glob of episode log files")
    p_analyze.add_argument("--top-pct", type=float, default=0.05,
                           help="top return fraction to mine (default 0.05)")
    p_analyze.add_argument("--report", required=True, help="output report JSON path")
    p_analyze.add_argument("--per-experiment", action="store_true",
                           help="allow logs from several experiments, one report each")
    p_analyze.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p_analyze.set_defaults(func=cmd_analyze)

    p_curve = sub.add_parser("curve", help="write the smoothed learning-curve CSV")
    p_curve.add_argument("--logs", required=True, help="glob of episode log files")
    p_curve.add_argument("--window", type=int, default=200, help="rolling window (default 200)")
    p_curve.add_argument("--out", required=True, help="output CSV path")
    p_curve.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p_curve.set_defaults(func=cmd_curve)

    p_serve = sub.add_parser("serve-mock", help="serve the mock grader over HTTP")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_serve_mock)

    p_probe = sub.add_parser("probe", help="greedy single-response rollout with a trained policy")
    p_probe.add_argument("--policy", required=True, help="policy JSON written by train")
    p_probe.add_argument("--response", required=True, help="the response text to revise")
    p_probe.add_argument("--grader", default="mock", help="'mock' or a remote endpoint URL")
    p_probe.set_defaults(func=cmd_probe)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("GRADE_PROBE_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="[%(levelname)s] %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GradeProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

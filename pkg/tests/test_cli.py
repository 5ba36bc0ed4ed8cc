"""CLI behavior: train/analyze/curve/probe plumbing and exit codes."""

from __future__ import annotations

import json
import socket

import numpy as np
import pytest

from gradeprobe.analytics import EpisodeLogWriter, read_report
from gradeprobe.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from gradeprobe.config import load_config, resolve_config
from gradeprobe.errors import ConfigValidationError
from gradeprobe.policy import default_featurizer, init_params, save_policy
from gradeprobe.presets import get_preset

from conftest import HANDCRAFTED_SPEC, insert, make_episode


def write_config(tmp_path, **overrides):
    document = {"experiment": 1, "run": {"total_timesteps": 64, "num_runs": 2, "rng_seed": 11}}
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(document.get(key), dict):
            document[key].update(value)
        else:
            document[key] = value
    path = tmp_path / "config.json"
    path.write_text(json.dumps(document))
    return path


def write_handcrafted_log(path, run_id=0, experiment_id=1):
    with EpisodeLogWriter(path, experiment_id=experiment_id, run_id=run_id) as writer:
        for i, (actions, ret) in enumerate(HANDCRAFTED_SPEC):
            writer.append(
                make_episode(
                    actions, ret, run_id=run_id, episode_index=i, experiment_id=experiment_id
                )
            )


class TestConfig:
    def test_minimal_config_resolves_with_defaults(self):
        cfg = resolve_config({"experiment": 2})
        assert cfg.experiment == 2
        assert cfg.limits.max_steps == 8
        assert cfg.limits.rating_threshold == 3.5
        assert cfg.reward.scale == 3.0
        assert cfg.ppo.clip_epsilon == 0.2
        assert cfg.run.total_timesteps == 75_000
        assert cfg.run.num_runs == 10
        assert cfg.top_fraction == 0.05 and cfg.window == 200

    def test_invalid_preset_names_field(self):
        with pytest.raises(ConfigValidationError) as err:
            resolve_config({"experiment": 4})
        assert "experiment" in str(err.value)

    def test_unknown_field_named(self):
        with pytest.raises(ConfigValidationError) as err:
            resolve_config({"experiment": 1, "ppo": {"lr": 0.1}})
        assert "ppo.lr" in str(err.value)

    def test_unknown_section_named(self):
        with pytest.raises(ConfigValidationError) as err:
            resolve_config({"experiment": 1, "extra": {}})
        assert "extra" in str(err.value)

    def test_range_checks(self):
        with pytest.raises(ConfigValidationError):
            resolve_config({"experiment": 1, "env": {"rating_threshold": 5.0}})
        with pytest.raises(ConfigValidationError):
            resolve_config({"experiment": 1, "analysis": {"top_fraction": 0.0}})
        with pytest.raises(ConfigValidationError):
            resolve_config({"experiment": 1, "run": {"num_runs": 0}})

    def test_remote_grader_needs_endpoint(self):
        with pytest.raises(ConfigValidationError):
            resolve_config({"experiment": 1, "grader": {"kind": "remote"}})

    def test_load_config_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ConfigValidationError):
            load_config(path)


class TestTrainCommand:
    def test_writes_logs_policies_manifest(self, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["train", "--config", str(config), "--out", str(out)]) == EXIT_OK
        assert (out / "run_00.jsonl").exists()
        assert (out / "run_01.jsonl").exists()
        assert (out / "policy_run_00.json").exists()
        assert (out / "policy_run_01.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["software_version"]
        assert len(manifest["runs"]) == 2
        # distinct per-run seeds derived from the master seed
        assert manifest["runs"][0]["rng_seed"] != manifest["runs"][1]["rng_seed"]
        # the config snapshot still validates against the schema
        assert resolve_config(manifest["config"]).run.num_runs == 2

    def test_deterministic_log_bytes(self, tmp_path):
        config = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["train", "--config", str(config), "--out", str(out_a)]) == EXIT_OK
        assert main(["train", "--config", str(config), "--out", str(out_b)]) == EXIT_OK
        for name in ("run_00.jsonl", "run_01.jsonl"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_parallel_matches_sequential(self, tmp_path):
        config = write_config(tmp_path)
        out_seq, out_par = tmp_path / "seq", tmp_path / "par"
        assert main(["train", "--config", str(config), "--out", str(out_seq)]) == EXIT_OK
        assert main(
            ["train", "--config", str(config), "--out", str(out_par), "--parallel"]
        ) == EXIT_OK
        for name in ("run_00.jsonl", "run_01.jsonl"):
            assert (out_seq / name).read_bytes() == (out_par / name).read_bytes()

    def test_invalid_preset_exits_validation(self, tmp_path, capsys):
        config = write_config(tmp_path, experiment=4)
        assert main(["train", "--config", str(config), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
        assert "experiment" in capsys.readouterr().err

    def test_custom_responses_file(self, tmp_path):
        responses = tmp_path / "responses.txt"
        responses.write_text("custom answer one\n\ncustom answer two\n")
        config = write_config(tmp_path, run={"total_timesteps": 16, "num_runs": 1})
        out = tmp_path / "out"
        assert main(
            ["train", "--config", str(config), "--out", str(out),
             "--responses", str(responses)]
        ) == EXIT_OK
        from gradeprobe.analytics import read_episode_log

        _, records = read_episode_log(out / "run_00.jsonl")
        assert {r.initial_text for r in records} <= {"custom answer one", "custom answer two"}

    def test_missing_responses_file(self, tmp_path):
        config = write_config(tmp_path)
        code = main(
            ["train", "--config", str(config), "--out", str(tmp_path / "o"),
             "--responses", str(tmp_path / "nope.txt")]
        )
        assert code == EXIT_VALIDATION

    def test_unreachable_remote_grader_exits_runtime(self, tmp_path):
        config = write_config(
            tmp_path,
            grader={"kind": "remote", "endpoint": "http://127.0.0.1:9"},
            run={"total_timesteps": 8, "num_runs": 1},
        )
        code = main(["train", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == EXIT_RUNTIME


class TestAnalyzeCommand:
    def test_handcrafted_log_matches_oracle(self, tmp_path):
        log = tmp_path / "run_00.jsonl"
        write_handcrafted_log(log)
        report_path = tmp_path / "report.json"
        code = main(
            ["analyze", "--logs", str(log), "--top-pct", "0.25",
             "--report", str(report_path), "--no-figure"]
        )
        assert code == EXIT_OK
        report = read_report(report_path)
        # frozen hand counts for the crafted log at fraction 0.25 (top 5)
        assert report.n_episodes_analyzed == 5
        assert report.mean_actions == 13 / 5
        assert report.repeat_sequence_fraction == 1.0
        assert report.triple_consecutive_fraction == 1 / 5
        assert report.delete_sequence_fraction == 1 / 5
        assert sum(report.per_action_frequency.values()) == pytest.approx(1.0, abs=1e-9)
        assert len(report.exemplar_sequences) == 5
        assert report.exemplar_sequences[0]["rendered"].count("[") == 2

    def test_fraction_one_covers_everything(self, tmp_path):
        log = tmp_path / "run_00.jsonl"
        write_handcrafted_log(log)
        report_path = tmp_path / "report.json"
        assert main(
            ["analyze", "--logs", str(log), "--top-pct", "1.0",
             "--report", str(report_path), "--no-figure"]
        ) == EXIT_OK
        report = read_report(report_path)
        assert report.n_episodes_analyzed == 20
        assert report.repeat_sequence_fraction == 0.25

    def test_empty_glob_is_runtime_error(self, tmp_path, capsys):
        code = main(
            ["analyze", "--logs", str(tmp_path / "none*.jsonl"),
             "--report", str(tmp_path / "r.json")]
        )
        assert code == EXIT_RUNTIME
        assert "no logs matched" in capsys.readouterr().err

    def test_mixed_experiments_require_flag(self, tmp_path):
        write_handcrafted_log(tmp_path / "exp1.jsonl", experiment_id=1)
        write_handcrafted_log(tmp_path / "exp2.jsonl", experiment_id=2)
        report_path = tmp_path / "report.json"
        code = main(
            ["analyze", "--logs", str(tmp_path / "exp*.jsonl"), "--report", str(report_path)]
        )
        assert code == EXIT_VALIDATION
        code = main(
            ["analyze", "--logs", str(tmp_path / "exp*.jsonl"),
             "--report", str(report_path), "--per-experiment", "--no-figure"]
        )
        assert code == EXIT_OK
        assert (tmp_path / "report.exp1.json").exists()
        assert (tmp_path / "report.exp2.json").exists()

    def test_bad_fraction(self, tmp_path):
        write_handcrafted_log(tmp_path / "run.jsonl")
        code = main(
            ["analyze", "--logs", str(tmp_path / "run.jsonl"), "--top-pct", "0",
             "--report", str(tmp_path / "r.json")]
        )
        assert code == EXIT_VALIDATION

    def test_figure_written_by_default(self, tmp_path):
        log = tmp_path / "run_00.jsonl"
        write_handcrafted_log(log)
        report_path = tmp_path / "report.json"
        assert main(["analyze", "--logs", str(log), "--report", str(report_path)]) == EXIT_OK
        assert report_path.with_suffix(".png").exists()


class TestCurveCommand:
    def make_logs(self, tmp_path, lengths=(20, 20)):
        rng = np.random.default_rng(3)
        for run_id, n in enumerate(lengths):
            with EpisodeLogWriter(tmp_path / f"run_{run_id:02d}.jsonl", 1, run_id) as writer:
                for i in range(n):
                    writer.append(
                        make_episode(
                            [insert(0, "end")],
                            float(rng.integers(-8, 12)),
                            run_id=run_id,
                            episode_index=i,
                        )
                    )

    def test_window_one_raw_means(self, tmp_path):
        self.make_logs(tmp_path)
        out = tmp_path / "curve.csv"
        code = main(
            ["curve", "--logs", str(tmp_path / "run_*.jsonl"), "--window", "1",
             "--out", str(out), "--no-figure"]
        )
        assert code == EXIT_OK
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "episode_index,mean,lower,upper"
        assert len(lines) == 21

    def test_unequal_lengths_truncate(self, tmp_path):
        self.make_logs(tmp_path, lengths=(20, 12))
        out = tmp_path / "curve.csv"
        assert main(
            ["curve", "--logs", str(tmp_path / "run_*.jsonl"), "--window", "3",
             "--out", str(out), "--no-figure"]
        ) == EXIT_OK
        assert len(out.read_text().strip().split("\n")) == 13

    def test_window_validation(self, tmp_path):
        self.make_logs(tmp_path)
        code = main(
            ["curve", "--logs", str(tmp_path / "run_*.jsonl"), "--window", "0",
             "--out", str(tmp_path / "c.csv")]
        )
        assert code == EXIT_VALIDATION

    def test_figure_written_by_default(self, tmp_path):
        self.make_logs(tmp_path)
        out = tmp_path / "curve.csv"
        assert main(["curve", "--logs", str(tmp_path / "run_*.jsonl"), "--out", str(out)]) == EXIT_OK
        assert out.with_suffix(".png").exists()


def biased_policy_file(tmp_path, phrase="water is more dense"):
    """A hand-built policy whose argmax always inserts `phrase` at the front."""
    preset = get_preset(1)
    feat = default_featurizer(preset.phrases)
    params = init_params(feat.dimension, feat.num_actions, np.random.default_rng(0))
    params.output_bias = params.output_bias.copy()
    params.output_bias[preset.phrases.index(phrase)] = 5.0  # front-insert block
    path = tmp_path / "policy.json"
    save_policy(path, params, feat, experiment_id=1, rng_seed=0)
    return path


class TestProbeCommand:
    def test_greedy_trace_reaches_threshold(self, tmp_path, capsys):
        policy = biased_policy_file(tmp_path)
        code = main(["probe", "--policy", str(policy), "--response", "i dont know"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "termination: threshold_reached" in out
        assert out.count("step ") == 3  # three stacked inserts clear the bar
        assert "[water is more dense]" in out
        assert "expected rating" in out

    def test_empty_response_is_validation_error(self, tmp_path):
        policy = biased_policy_file(tmp_path)
        assert main(["probe", "--policy", str(policy), "--response", "  "]) == EXIT_VALIDATION

    def test_missing_policy_file(self, tmp_path):
        code = main(
            ["probe", "--policy", str(tmp_path / "nope.json"), "--response", "x"]
        )
        assert code == EXIT_VALIDATION

    def test_remote_grader_url(self, tmp_path):
        import threading

        from gradeprobe.server import make_mock_server

        server = make_mock_server(0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            host, port = server.server_address
            policy = biased_policy_file(tmp_path)
            code = main(
                ["probe", "--policy", str(policy), "--response", "i dont know",
                 "--grader", f"http://{host}:{port}"]
            )
            assert code == EXIT_OK
        finally:
            server.shutdown()
            server.server_close()


class TestServeMock:
    def test_busy_port_fails_cleanly(self, capsys):
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            assert main(["serve-mock", "--port", str(port)]) == EXIT_RUNTIME
            assert "cannot bind" in capsys.readouterr().err
        finally:
            blocker.close()

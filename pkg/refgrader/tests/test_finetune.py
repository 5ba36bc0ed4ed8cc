"""Fine-tuning pipeline on the synthetic labeled set."""

from __future__ import annotations

import json

import pytest

from refgrader.bundle import build_tiny_bundle, load_bundle
from refgrader.data import load_csv, make_synthetic_dataset, split_dataset, write_csv
from refgrader.finetune import FinetuneConfig, finetune


class TestData:
    def test_synthetic_round_trip(self, tmp_path):
        dataset = make_synthetic_dataset(80, seed=1)
        path = tmp_path / "data.csv"
        write_csv(dataset, path)
        loaded = load_csv(path)
        assert loaded.texts == dataset.texts
        assert loaded.labels == dataset.labels

    def test_split_disjoint_exhaustive(self):
        dataset = make_synthetic_dataset(100, seed=2)
        train, val, test = split_dataset(dataset, seed=3)
        assert len(train) == 70 and len(val) == 15 and len(test) == 15
        combined = sorted(train.texts + val.texts + test.texts)
        assert combined == sorted(dataset.texts)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("response,score\nhello,3\n")
        with pytest.raises(ValueError):
            load_csv(path)

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("text,label\nhello,7\n")
        with pytest.raises(ValueError):
            load_csv(path)


class TestFinetune:
    def test_refuses_small_dataset(self, tmp_path, tiny_bundle):
        path = tmp_path / "small.csv"
        write_csv(make_synthetic_dataset(30, seed=0), path)
        with pytest.raises(ValueError) as err:
            finetune(tiny_bundle, path, FinetuneConfig(epochs=1), tmp_path / "out")
        assert "50" in str(err.value)

    def test_end_to_end(self, tmp_path):
        data_path = tmp_path / "data.csv"
        write_csv(make_synthetic_dataset(120, seed=4), data_path)
        bundle = load_bundle(build_tiny_bundle(tmp_path / "base", seed=0))
        config = FinetuneConfig(epochs=2, batch_size=16, seed=0)
        metrics = finetune(bundle, data_path, config, tmp_path / "tuned")

        assert metrics["split"] == {"train": 84, "val": 18, "test": 18}
        assert -1.0 <= metrics["test_qwk"] <= 1.0
        assert (tmp_path / "tuned" / "metrics.json").exists()
        written = json.loads((tmp_path / "tuned" / "metrics.json").read_text())
        assert written["test_qwk"] == metrics["test_qwk"]

        # the tuned bundle loads and serves
        tuned = load_bundle(tmp_path / "tuned")
        from refgrader.inference import grade_texts

        rows = grade_texts(tuned, ["the pitch is lower in the full glass"])
        assert len(rows[0]) == 5

    def test_config_file_parsing(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"learning_rate": 0.001, "epochs": 2, "batch_size": 8, "seed": 9}')
        config = FinetuneConfig.from_file(path)
        assert config.learning_rate == 0.001 and config.seed == 9
        path.write_text('{"lr": 0.001}')
        with pytest.raises(ValueError):
            FinetuneConfig.from_file(path)

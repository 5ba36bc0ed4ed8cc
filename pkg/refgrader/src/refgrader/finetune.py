"""Fine-tuning: train the classifier head+encoder on a labeled CSV.

Trains on the 70% split, keeps the epoch with the lowest validation
loss, and reports held-out test QWK and one-vs-rest AUC next to the
saved bundle.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .bundle import GraderModelBundle, save_bundle
from .data import MIN_ROWS, LabeledResponseSet, load_csv, split_dataset
from .inference import grade_texts
from .metrics import one_vs_rest_auc, qwk

log = logging.getLogger("refgrader.finetune")


@dataclass(frozen=True)
class FinetuneConfig:
    learning_rate: float = 2e-3
    epochs: int = 12
    batch_size: int = 16
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "FinetuneConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {"learning_rate", "epochs", "batch_size", "seed"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown finetune config fields: {sorted(unknown)}")
        return cls(**doc)


def _encode(bundle: GraderModelBundle, split: LabeledResponseSet):
    encoded = bundle.tokenizer(
        split.texts,
        padding=True,
        truncation=True,
        max_length=bundle.max_length,
        return_tensors="pt",
    )
    targets = torch.tensor([label - 1 for label in split.labels], dtype=torch.long)
    return encoded, targets


def _epoch_loss(bundle: GraderModelBundle, split: LabeledResponseSet, batch_size: int) -> float:
    encoded, targets = _encode(bundle, split)
    loss_fn = torch.nn.CrossEntropyLoss(reduction="sum")
    total = 0.0
    bundle.model.eval()
    with torch.no_grad():
        for start in range(0, len(split), batch_size):
            sl = slice(start, start + batch_size)
            logits = bundle.model(
                input_ids=encoded["input_ids"][sl],
                attention_mask=encoded["attention_mask"][sl],
            ).logits
            total += float(loss_fn(logits, targets[sl]))
    return total / len(split)


def finetune(
    bundle: GraderModelBundle,
    dataset_path: str | Path,
    config: FinetuneConfig,
    out_dir: str | Path,
) -> dict:
    """Fine-tune in place, save the best bundle + metrics.json, return metrics."""
    dataset = load_csv(dataset_path)
    if len(dataset) < MIN_ROWS:
        raise ValueError(
            f"dataset has {len(dataset)} rows; at least {MIN_ROWS} are required"
        )
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    train, val, test = split_dataset(dataset, config.seed)

    encoded, targets = _encode(bundle, train)
    optimizer = torch.optim.AdamW(bundle.model.parameters(), lr=config.learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()

    best_state = {k: v.clone() for k, v in bundle.model.state_dict().items()}
    best_val = _epoch_loss(bundle, val, config.batch_size)
    best_epoch = 0
    history = [{"epoch": 0, "val_loss": best_val}]

    n = len(train)
    for epoch in range(1, config.epochs + 1):
        bundle.model.train()
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = torch.from_numpy(order[start : start + config.batch_size].copy())
            optimizer.zero_grad()
            logits = bundle.model(
                input_ids=encoded["input_ids"][idx],
                attention_mask=encoded["attention_mask"][idx],
            ).logits
            loss = loss_fn(logits, targets[idx])
            loss.backward()
            optimizer.step()
        val_loss = _epoch_loss(bundle, val, config.batch_size)
        history.append({"epoch": epoch, "val_loss": val_loss})
        log.info("epoch %d: val loss %.4f", epoch, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_state = {k: v.clone() for k, v in bundle.model.state_dict().items()}

    bundle.model.load_state_dict(best_state)
    bundle.model.eval()

    probabilities = np.asarray(grade_texts(bundle, test.texts, config.batch_size))
    predictions = [int(np.argmax(row)) + 1 for row in probabilities]
    metrics = {
        "rows": len(dataset),
        "split": {"train": len(train), "val": len(val), "test": len(test)},
        "selected_epoch": best_epoch,
        "val_loss": best_val,
        "test_qwk": qwk(test.labels, predictions),
        "test_auc_ovr": one_vs_rest_auc(test.labels, probabilities),
        "history": history,
        "config": {
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "seed": config.seed,
        },
    }

    out = save_bundle(bundle, out_dir, extra={"finetuned_from": str(dataset_path)})
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2), encoding="utf-8")
    return metrics

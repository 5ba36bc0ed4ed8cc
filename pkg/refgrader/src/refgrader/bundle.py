"""Model bundle handling: a transformer encoder with a 5-class head.

A bundle directory holds the transformers model + tokenizer artifacts and
a bundle.json with the model_id reported on the wire. The default bundle
is a tiny randomly initialized BERT-style classifier over a locally built
vocabulary; it exists to exercise the serving and fine-tuning pipeline,
not as an accuracy claim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

from .protocol import NUM_CLASSES

BUNDLE_SCHEMA = "refgrader/bundle"
BUNDLE_VERSION = 1
DEFAULT_MODEL_ID = "refgrader-tiny-v1"

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")

# Vocabulary for the shipped tiny bundle: question-domain words plus the
# filler the synthetic dataset generator uses.
DEFAULT_VOCAB_WORDS = (
    "the a an is are was it its in of to and or not very really i think maybe because so "
    "when you tap hit glass glasses cup water air empty full sound sounds noise pitch tone "
    "high higher low lower same different change changes wave waves frequency amplitude "
    "vibration vibrations vibrate mass dense density speed fast faster slow slower travels "
    "moves makes louder quieter ring rings deep flat idk dont know guess more less has have "
    "than through inside stuff thing happens hear heard listen difference"
).split()


@dataclass
class GraderModelBundle:
    """A loaded grader: encoder + 5-class head + tokenizer + model_id."""

    model: BertForSequenceClassification
    tokenizer: BertTokenizer
    model_id: str
    max_length: int

    def __post_init__(self) -> None:
        if self.model.config.num_labels != NUM_CLASSES:
            raise ValueError(
                f"classification head must have {NUM_CLASSES} outputs, "
                f"got {self.model.config.num_labels}"
            )
        self.model.eval()


def build_tiny_bundle(
    out_dir: str | Path,
    seed: int = 0,
    vocab_words: tuple[str, ...] = tuple(DEFAULT_VOCAB_WORDS),
    model_id: str = DEFAULT_MODEL_ID,
) -> Path:
    """Create and save the default tiny bundle; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    vocab_path = out / "vocab.txt"
    vocab = list(SPECIAL_TOKENS) + sorted(set(vocab_words))
    vocab_path.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_path), do_lower_case=True)

    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=128,
        max_position_embeddings=128,
        num_labels=NUM_CLASSES,
    )
    torch.manual_seed(seed)
    model = BertForSequenceClassification(config)

    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    (out / "bundle.json").write_text(
        json.dumps(
            {
                "schema": BUNDLE_SCHEMA,
                "version": BUNDLE_VERSION,
                "model_id": model_id,
                "seed": seed,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return out


def save_bundle(
    bundle: GraderModelBundle, out_dir: str | Path, extra: dict | None = None
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle.model.save_pretrained(out)
    bundle.tokenizer.save_pretrained(out)
    meta = {
        "schema": BUNDLE_SCHEMA,
        "version": BUNDLE_VERSION,
        "model_id": bundle.model_id,
    }
    if extra:
        meta.update(extra)
    (out / "bundle.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return out


def load_bundle(bundle_dir: str | Path) -> GraderModelBundle:
    path = Path(bundle_dir)
    meta_path = path / "bundle.json"
    model_id = DEFAULT_MODEL_ID
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("schema") != BUNDLE_SCHEMA:
            raise ValueError(f"{meta_path}: unexpected schema {meta.get('schema')!r}")
        model_id = meta.get("model_id", DEFAULT_MODEL_ID)
    model = BertForSequenceClassification.from_pretrained(path)
    tokenizer = BertTokenizer.from_pretrained(path)
    max_length = int(getattr(model.config, "max_position_embeddings", 128))
    return GraderModelBundle(
        model=model, tokenizer=tokenizer, model_id=model_id, max_length=max_length
    )

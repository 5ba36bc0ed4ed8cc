"""Transformer-based 5-class reference grader behind the grading wire protocol."""

__version__ = "0.1.0"

from .bundle import GraderModelBundle, build_tiny_bundle, load_bundle, save_bundle
from .data import LabeledResponseSet, load_csv, make_synthetic_dataset, split_dataset
from .finetune import FinetuneConfig, finetune
from .inference import grade_texts
from .metrics import one_vs_rest_auc, qwk
from .server import make_server, serve

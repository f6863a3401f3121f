"""Model service for the dialogue generation/scoring wire protocol.

Hosts a sequence-to-sequence generation model behind POST /generate and a
multiple-choice scorer behind POST /score, and trains both from the JSONL
training files the corpus toolkit emits. The packages share nothing but the
HTTP protocol and those file formats.
"""

from .data import BridgeDataError, load_collector_records, load_labeler_records
from .errors import BridgeConfigError, BridgeError
from .models import EchoGenerator, TorchGenerator, TorchScorer, load_checkpoint
from .service import ServiceConfig, create_app
from .training import TrainingConfig, train_collector, train_labeler

__all__ = [
    "BridgeConfigError",
    "BridgeDataError",
    "BridgeError",
    "EchoGenerator",
    "ServiceConfig",
    "TorchGenerator",
    "TorchScorer",
    "TrainingConfig",
    "create_app",
    "load_checkpoint",
    "load_collector_records",
    "load_labeler_records",
    "train_collector",
    "train_labeler",
]

"""Desk-scale neural backend for coherence scoring and sentence infilling.

Trains two small recurrent models from scratch (no pretrained checkpoints)
and serves them over the JSON wire protocol in
``schemas/model_service_protocol.json``: POST /score returns a coherence
probability, POST /generate reconstructs a masked sentence from one-sided
context, GET /health reports the loaded model identifiers.
"""

__version__ = "0.1.0"

from .data import Sample, load_dataset, two_part_split
from .errors import ConfigError, ServiceError
from .training import TrainConfig, train_classifier, train_generator, two_part_training
from .vocab import Vocabulary

__all__ = [
    "__version__",
    "ConfigError",
    "Sample",
    "ServiceError",
    "TrainConfig",
    "Vocabulary",
    "load_dataset",
    "train_classifier",
    "train_generator",
    "two_part_split",
    "two_part_training",
]

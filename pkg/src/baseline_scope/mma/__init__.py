"""Multi-module attention classifier: model, training, and verification."""

from .checkpoint import (CheckpointError, CheckpointMismatchError, load_checkpoint,
                         save_checkpoint)
from .embedder import EmbedderIface, HashEmbedder, PretrainedTransformerEmbedder, make_embedder
from .gradcheck import gradcheck
from .model import (BASELINE_INDEX, CLASS_ORDER, EncodedExample, MmaConfig, MmaModel,
                    Prediction, classify, encode_example, toy_config)
from .train import (Adam, TrainResult, batch_pass, build_examples, class_weights_for,
                    dev_metrics, predict_examples, train_model, train_on_examples)

__all__ = [
    "Adam", "BASELINE_INDEX", "CLASS_ORDER", "CheckpointError", "CheckpointMismatchError",
    "EmbedderIface", "EncodedExample", "HashEmbedder", "MmaConfig", "MmaModel", "Prediction",
    "PretrainedTransformerEmbedder", "TrainResult", "batch_pass", "build_examples",
    "class_weights_for", "classify", "dev_metrics", "encode_example", "gradcheck",
    "load_checkpoint", "make_embedder", "predict_examples", "save_checkpoint", "toy_config",
    "train_model", "train_on_examples",
]

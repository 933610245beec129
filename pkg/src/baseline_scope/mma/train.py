"""Training loop: class-weighted cross-entropy minimized with Adam.

One logical thread drives the loop; examples are pre-encoded once (the
embedder is frozen) and reused across epochs. Every epoch logs training
loss and dev precision/recall/F1; the parameters with the best dev macro-F1
are restored at the end. Given a seed and a deterministic embedder the
whole run is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import PaperDoc
from ..evaluation import MetricsReport, compute_metrics
from ..features import CueLexicon
from .embedder import EmbedderIface
from .layers import weighted_cross_entropy
from .model import (CLASS_ORDER, EncodedExample, MmaConfig, MmaModel, Prediction,
                    encode_example)


class Adam:
    """Adaptive-moment optimizer over the model's named parameters."""

    def __init__(self, model: MmaModel, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {name: np.zeros_like(param) for name, param, _ in model.named_parameters()}
        self._v = {name: np.zeros_like(param) for name, param, _ in model.named_parameters()}

    def step(self) -> None:
        self.step_count += 1
        bias1 = 1.0 - self.beta1 ** self.step_count
        bias2 = 1.0 - self.beta2 ** self.step_count
        for name, param, grad in self.model.named_parameters():
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= self.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


@dataclass
class TrainResult:
    model: MmaModel
    log: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_dev_f1: float = 0.0


def build_examples(docs: Sequence[PaperDoc], embedder: EmbedderIface,
                   lexicon: CueLexicon | None = None, count_transform: str = "log1p",
                   labeled_only: bool = True) -> list[EncodedExample]:
    examples = []
    for doc in docs:
        for ref in doc.references:
            if labeled_only and ref.label == "unlabeled":
                continue
            examples.append(encode_example(doc, ref.ref_id, embedder, lexicon, count_transform))
    return examples


def class_weights_for(examples: Sequence[EncodedExample], config: MmaConfig) -> np.ndarray:
    """Configured weights, or inverse class frequency when unset."""
    if config.class_weights is not None:
        return np.asarray(config.class_weights, dtype=np.float64)
    counts = np.zeros(len(CLASS_ORDER))
    for example in examples:
        counts[example.label_index] += 1
    if (counts == 0).any():
        raise ValueError("training data must contain both classes")
    return counts.sum() / (len(CLASS_ORDER) * counts)


def batch_pass(model: MmaModel, batch: Sequence[EncodedExample], weights: np.ndarray,
               train: bool, rng: np.random.Generator | None) -> float:
    """Weighted-mean cross-entropy over a batch; accumulates gradients when training."""
    total_weight = float(sum(weights[ex.label_index] for ex in batch))
    loss_sum = 0.0
    for example in batch:
        logits, _ = model.forward(example, train=train, rng=rng)
        loss, dlogits = weighted_cross_entropy(
            logits, example.label_index, float(weights[example.label_index]))
        loss_sum += loss
        if train:
            model.backward(dlogits / total_weight)
        else:
            model.reset()
    return loss_sum / total_weight


def predict_examples(model: MmaModel, examples: Sequence[EncodedExample]) -> list[Prediction]:
    return [model.predict(example) for example in examples]


def dev_metrics(model: MmaModel, examples: Sequence[EncodedExample]) -> MetricsReport:
    gold = [CLASS_ORDER[ex.label_index] for ex in examples]
    predicted = [p.label for p in predict_examples(model, examples)]
    return compute_metrics(gold, predicted)


def train_model(train_docs: Sequence[PaperDoc], dev_docs: Sequence[PaperDoc],
                config: MmaConfig, embedder: EmbedderIface,
                lexicon: CueLexicon | None = None) -> TrainResult:
    """Train on labeled references of train_docs, checkpoint by dev macro-F1."""
    train_examples = build_examples(train_docs, embedder, lexicon, config.count_transform)
    dev_examples = build_examples(dev_docs, embedder, lexicon, config.count_transform)
    return train_on_examples(train_examples, dev_examples, config)


def train_on_examples(train_examples: Sequence[EncodedExample],
                      dev_examples: Sequence[EncodedExample],
                      config: MmaConfig) -> TrainResult:
    if not train_examples or not dev_examples:
        raise ValueError("train and dev splits must both be nonempty")
    labels = {ex.label_index for ex in train_examples}
    if None in labels:
        raise ValueError("every training example must be labeled")
    if len(labels) < 2:
        raise ValueError("training data contains a single class; nothing to separate")

    weights = class_weights_for(train_examples, config)
    model = MmaModel(config)
    optimizer = Adam(model, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    order = np.arange(len(train_examples))

    result = TrainResult(model=model)
    best_state: dict[str, np.ndarray] | None = None
    for epoch in range(config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_examples[i] for i in order[start:start + config.batch_size]]
            model.zero_grads()
            epoch_loss += batch_pass(model, batch, weights, train=True, rng=rng)
            optimizer.step()
            batches += 1
        metrics = dev_metrics(model, dev_examples)
        entry = {
            "epoch": epoch,
            "loss": epoch_loss / batches,
            "dev_precision": metrics.overall["precision"],
            "dev_recall": metrics.overall["recall"],
            "dev_f1": metrics.overall["f1"],
        }
        result.log.append(entry)
        if best_state is None or entry["dev_f1"] > result.best_dev_f1:
            result.best_dev_f1 = entry["dev_f1"]
            result.best_epoch = epoch
            best_state = model.state_dict()
    model.load_state_dict(best_state)
    return result

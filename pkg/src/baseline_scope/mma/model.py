"""The multi-module attention classifier.

Three modules produce one vector each: a hierarchical-attention + BiLSTM
encoder over the citation context window, a layer-attention + transformer
encoder over the (title+abstract, citation sentence) pair, and a feature
module over the 52-dim non-textual bundle. Module-level attention fuses
the three vectors and a linear head emits two logits
(class order: non_baseline, baseline).

All forward passes cache what backward needs; gradients accumulate in the
layer objects until zero_grads().
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..context import ContextWindow, citation_sentence, extract_window, select_primary_mention
from ..corpus import PaperDoc
from ..features import COUNT_TRANSFORMS, FEATURE_DIM, CueLexicon, FeatureVector, extract_feature_vector
from .embedder import EmbedderIface
from .layers import (AdditiveAttention, BiLSTM, Dropout, LayerMix, Linear, TanhProjection,
                     TransformerLayer, softmax)

CLASS_ORDER = ("non_baseline", "baseline")
BASELINE_INDEX = 1

ATTENTION_SITES = ("word_attention", "sentence_attention", "layer_attention",
                   "feature_attention", "module_attention")


@dataclass(frozen=True)
class MmaConfig:
    context_dim: int = 768
    bilstm_hidden: int = 64
    dropout: float = 0.2
    encoder_layers: int = 6
    encoder_heads: int = 8
    fused_dim: int = 128
    feature_dim: int = FEATURE_DIM
    batch_size: int = 32
    learning_rate: float = 0.001
    epochs: int = 20
    class_weights: tuple[float, float] | None = None  # (non_baseline, baseline); None = inverse frequency
    seed: int = 0
    attention_dim: int = 64
    family_dim: int = 32
    layer_count: int = 13
    decision_threshold: float = 0.5
    count_transform: str = "log1p"

    def __post_init__(self):
        positive = ("context_dim", "bilstm_hidden", "encoder_layers", "encoder_heads",
                    "fused_dim", "batch_size", "epochs", "attention_dim", "family_dim",
                    "layer_count")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.context_dim % self.encoder_heads:
            raise ValueError("context_dim must be divisible by encoder_heads")
        if self.feature_dim != FEATURE_DIM:
            raise ValueError(f"feature_dim must be {FEATURE_DIM}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.class_weights is not None:
            if len(self.class_weights) != 2 or any(w <= 0 for w in self.class_weights):
                raise ValueError("class_weights must be a pair of positive reals")
            object.__setattr__(self, "class_weights", tuple(float(w) for w in self.class_weights))
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must lie in (0, 1)")
        if self.count_transform not in COUNT_TRANSFORMS:
            raise ValueError(f"unknown count_transform {self.count_transform!r}")

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in self.__dataclass_fields__.values()}
        if data["class_weights"] is not None:
            data["class_weights"] = list(data["class_weights"])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "MmaConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if data.get("class_weights") is not None:
            data = {**data, "class_weights": tuple(data["class_weights"])}
        return cls(**data)


def toy_config(**overrides) -> MmaConfig:
    """Small dimensions for fast, fully deterministic tests and toy training."""
    defaults = dict(context_dim=8, bilstm_hidden=8, dropout=0.0, encoder_layers=1,
                    encoder_heads=2, fused_dim=16, batch_size=8, learning_rate=0.01,
                    epochs=50, attention_dim=8, family_dim=8, layer_count=4)
    defaults.update(overrides)
    return MmaConfig(**defaults)


@dataclass(frozen=True)
class Prediction:
    prob_baseline: float
    label: str
    logits: np.ndarray
    features_only: bool = False


@dataclass
class EncodedExample:
    """Embedder outputs and features for one (paper, reference) pair."""

    paper_id: str
    ref_id: str
    features: np.ndarray
    context_embed: np.ndarray | None = None  # (rows, cols, dim)
    context_mask: np.ndarray | None = None
    citation_row: int = 0
    pair_states: np.ndarray | None = None  # (layer_count, seq, dim)
    label_index: int | None = None
    features_only: bool = False


def encode_example(doc: PaperDoc, ref_id: str, embedder: EmbedderIface,
                   lexicon: CueLexicon | None = None,
                   count_transform: str = "log1p") -> EncodedExample:
    """Precompute everything the model consumes for one reference."""
    fv = extract_feature_vector(doc, ref_id, lexicon, count_transform)
    ref = doc.reference(ref_id)
    label_index = None if ref.label == "unlabeled" else CLASS_ORDER.index(ref.label)
    mention = select_primary_mention(doc, ref_id)
    if mention is None:
        return EncodedExample(paper_id=doc.paper_id, ref_id=ref_id, features=fv.to_array(),
                              label_index=label_index, features_only=True)
    window = extract_window(doc, mention)
    title_abstract = tuple(doc.title) + tuple(doc.abstract) or ("<empty>",)
    sentence = citation_sentence(doc, mention)
    return EncodedExample(
        paper_id=doc.paper_id,
        ref_id=ref_id,
        features=fv.to_array(),
        context_embed=embedder.token_embed(window),
        context_mask=window.mask.copy(),
        citation_row=window.citation_row,
        pair_states=embedder.encode_pair(title_abstract, sentence),
        label_index=label_index,
    )


class MmaModel:
    """Parameter container and forward/backward passes for the classifier."""

    def __init__(self, config: MmaConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        d = config.context_dim
        attn = config.attention_dim
        fused = config.fused_dim
        family = config.family_dim

        self.word_attn = AdditiveAttention(rng, d, attn)
        self.sent_attn = AdditiveAttention(rng, d, attn)
        self.bilstm = BiLSTM(rng, d, config.bilstm_hidden)
        self.ctx_proj = TanhProjection(rng, 2 * config.bilstm_hidden, fused)
        self.layer_mix = LayerMix(config.layer_count)
        self.encoder = [TransformerLayer(rng, d, config.encoder_heads)
                        for _ in range(config.encoder_layers)]
        self.pair_proj = TanhProjection(rng, d, fused)
        self.loc_map = TanhProjection(rng, 6, family)
        self.cue_map = TanhProjection(rng, 45, family)
        self.count_map = TanhProjection(rng, 1, family)
        self.feat_attn = AdditiveAttention(rng, family, attn)
        self.feat_proj = TanhProjection(rng, family, fused)
        self.module_attn = AdditiveAttention(rng, fused, attn)
        self.head = Linear(rng, fused, len(CLASS_ORDER))

        self.drop_ctx = Dropout(config.dropout)
        self.drop_pair = Dropout(config.dropout)
        self.drop_feat = Dropout(config.dropout)
        self.drop_fused = Dropout(config.dropout)

        self._layers = [self.word_attn, self.sent_attn, self.bilstm, self.ctx_proj,
                        self.layer_mix, *self.encoder, self.pair_proj, self.loc_map,
                        self.cue_map, self.count_map, self.feat_attn, self.feat_proj,
                        self.module_attn, self.head,
                        self.drop_ctx, self.drop_pair, self.drop_feat, self.drop_fused]
        self._local = threading.local()

    @property
    def _cache(self) -> dict | None:
        return getattr(self._local, "cache", None)

    @_cache.setter
    def _cache(self, value: dict | None) -> None:
        self._local.cache = value

    # -- parameter access ---------------------------------------------------

    def parameter_groups(self) -> dict[str, dict[str, np.ndarray]]:
        return {
            "word_attention": self.word_attn.params,
            "sentence_attention": self.sent_attn.params,
            "bilstm": self.bilstm.params,
            "context_projection": self.ctx_proj.params,
            "layer_attention": self.layer_mix.params,
            "pair_encoder": {f"{i}.{name}": param for i, layer in enumerate(self.encoder)
                             for name, param in layer.params.items()},
            "pair_projection": self.pair_proj.params,
            "feature_linear": {f"{family}.{name}": param
                               for family, maps in (("loc", self.loc_map), ("cue", self.cue_map),
                                                    ("count", self.count_map))
                               for name, param in maps.params.items()},
            "feature_attention": self.feat_attn.params,
            "feature_projection": self.feat_proj.params,
            "module_attention": self.module_attn.params,
            "classifier_head": self.head.params,
        }

    def gradient_groups(self) -> dict[str, dict[str, np.ndarray]]:
        return {
            "word_attention": self.word_attn.grads,
            "sentence_attention": self.sent_attn.grads,
            "bilstm": self.bilstm.grads,
            "context_projection": self.ctx_proj.grads,
            "layer_attention": self.layer_mix.grads,
            "pair_encoder": {f"{i}.{name}": grad for i, layer in enumerate(self.encoder)
                             for name, grad in layer.grads.items()},
            "pair_projection": self.pair_proj.grads,
            "feature_linear": {f"{family}.{name}": grad
                               for family, maps in (("loc", self.loc_map), ("cue", self.cue_map),
                                                    ("count", self.count_map))
                               for name, grad in maps.grads.items()},
            "feature_attention": self.feat_attn.grads,
            "feature_projection": self.feat_proj.grads,
            "module_attention": self.module_attn.grads,
            "classifier_head": self.head.grads,
        }

    def named_parameters(self) -> list[tuple[str, np.ndarray, np.ndarray]]:
        grads = self.gradient_groups()
        out = []
        for group, params in self.parameter_groups().items():
            for name, param in params.items():
                out.append((f"{group}.{name}", param, grads[group][name]))
        return out

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.copy() for name, param, _ in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = {name: param for name, param, _ in self.named_parameters()}
        if set(own) != set(state):
            missing = sorted(set(own) ^ set(state))
            raise ValueError(f"parameter names do not match checkpoint: {missing[:5]}")
        for name, param in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise ValueError(f"shape mismatch for {name}: {value.shape} vs {param.shape}")
            param[...] = value

    def zero_grads(self) -> None:
        for layer in self._layers:
            layer.zero_grads()

    def reset(self) -> None:
        for layer in self._layers:
            layer.reset()
        self._cache = None

    # -- module forwards/backwards -------------------------------------------

    def _encode_context(self, embed: np.ndarray, mask: np.ndarray, train: bool, rng):
        if embed.shape[2] != self.config.context_dim:
            raise ValueError(f"embedding dim {embed.shape[2]} != context_dim {self.config.context_dim}")
        real = np.flatnonzero(mask.any(axis=1))
        if real.size == 0:
            raise ValueError("cannot encode an all-masked window")
        word_weights = np.zeros(mask.shape)
        sentence_vecs = []
        for i in real:
            pooled, alpha = self.word_attn.pool(embed[i], mask[i])
            word_weights[i] = alpha
            sentence_vecs.append(pooled)
        stacked = np.stack(sentence_vecs)
        sent_alpha = self.sent_attn.weights(stacked)
        attended = sent_alpha[:, None] * stacked
        final = self.bilstm.forward(attended)
        vec = self.drop_ctx.forward(self.ctx_proj.forward(final), train, rng)
        sentence_weights = np.zeros(mask.shape[0])
        sentence_weights[real] = sent_alpha
        aux = {"word_attention": word_weights, "sentence_attention": sentence_weights}
        return vec, (real, stacked, sent_alpha), aux

    def _backward_context(self, dvec: np.ndarray, cache) -> None:
        real, stacked, sent_alpha = cache
        dfinal = self.ctx_proj.backward(self.drop_ctx.backward(dvec))
        dattended = self.bilstm.backward(dfinal)
        dalpha = (dattended * stacked).sum(axis=1)
        dstacked = sent_alpha[:, None] * dattended
        dstacked = dstacked + self.sent_attn.backward_weights(dalpha)
        for idx in range(len(real) - 1, -1, -1):
            self.word_attn.backward_pool(dstacked[idx])  # embeddings are frozen

    def _encode_pair(self, states: np.ndarray, train: bool, rng):
        if states.ndim != 3 or states.shape[0] != self.config.layer_count:
            raise ValueError(f"pair states must be ({self.config.layer_count}, seq, dim)")
        if states.shape[1] == 0:
            raise ValueError("cannot encode an empty pair sequence")
        mixed, beta = self.layer_mix.forward(states)
        x = mixed
        for layer in self.encoder:
            x = layer.forward(x)
        vec = self.drop_pair.forward(self.pair_proj.forward(x[0]), train, rng)
        return vec, states.shape[1:], {"layer_attention": beta}

    def _backward_pair(self, dvec: np.ndarray, seq_shape) -> None:
        dpooled = self.pair_proj.backward(self.drop_pair.backward(dvec))
        dx = np.zeros(seq_shape)
        dx[0] = dpooled
        for layer in reversed(self.encoder):
            dx = layer.backward(dx)
        self.layer_mix.backward(dx)

    def _encode_features(self, features: np.ndarray, train: bool, rng):
        if features.shape != (FEATURE_DIM,):
            raise ValueError(f"feature vector must have shape ({FEATURE_DIM},)")
        families = np.stack([
            self.loc_map.forward(features[:6]),
            self.cue_map.forward(features[6:6 + 45]),
            self.count_map.forward(features[51:52]),
        ])
        pooled, alpha = self.feat_attn.pool(families)
        vec = self.drop_feat.forward(self.feat_proj.forward(pooled), train, rng)
        return vec, {"feature_attention": alpha}

    def _backward_features(self, dvec: np.ndarray) -> None:
        dpooled = self.feat_proj.backward(self.drop_feat.backward(dvec))
        dfam = self.feat_attn.backward_pool(dpooled)
        self.count_map.backward(dfam[2])
        self.cue_map.backward(dfam[1])
        self.loc_map.backward(dfam[0])

    # -- full passes ----------------------------------------------------------

    def forward(self, example: EncodedExample, train: bool = False,
                rng: np.random.Generator | None = None) -> tuple[np.ndarray, dict]:
        fused = self.config.fused_dim
        aux: dict = {}
        if example.features_only:
            ctx_vec = np.zeros(fused)
            pair_vec = np.zeros(fused)
            ctx_cache = pair_shape = None
        else:
            ctx_vec, ctx_cache, ctx_aux = self._encode_context(
                example.context_embed, example.context_mask, train, rng)
            pair_vec, pair_shape, pair_aux = self._encode_pair(example.pair_states, train, rng)
            aux.update(ctx_aux)
            aux.update(pair_aux)
        feat_vec, feat_aux = self._encode_features(example.features, train, rng)
        aux.update(feat_aux)

        modules = np.stack([ctx_vec, pair_vec, feat_vec])
        fused_vec, module_alpha = self.module_attn.pool(modules)
        aux["module_attention"] = module_alpha
        logits = self.head.forward(self.drop_fused.forward(fused_vec, train, rng))
        self._cache = {"ctx": ctx_cache, "pair": pair_shape,
                       "text_ran": not example.features_only}
        return logits, aux

    def backward(self, dlogits: np.ndarray) -> None:
        if self._cache is None:
            raise RuntimeError("backward called without a pending forward")
        cache, self._cache = self._cache, None
        dfused = self.drop_fused.backward(self.head.backward(dlogits))
        dmodules = self.module_attn.backward_pool(dfused)
        self._backward_features(dmodules[2])
        if cache["text_ran"]:
            self._backward_pair(dmodules[1], cache["pair"])
            self._backward_context(dmodules[0], cache["ctx"])

    def predict(self, example: EncodedExample) -> Prediction:
        logits, _ = self.forward(example, train=False)
        self.reset()  # inference keeps no backward caches
        probs = softmax(logits)
        prob_baseline = float(probs[BASELINE_INDEX])
        label = CLASS_ORDER[BASELINE_INDEX] if prob_baseline >= self.config.decision_threshold \
            else CLASS_ORDER[0]
        return Prediction(prob_baseline=prob_baseline, label=label, logits=logits,
                          features_only=example.features_only)

    # -- convenience wrappers over raw inputs ---------------------------------

    def encode_context_window(self, window: ContextWindow, embedder: EmbedderIface) -> np.ndarray:
        vec, _, _ = self._encode_context(embedder.token_embed(window), window.mask, False, None)
        self.reset()
        return vec

    def encode_pair_tokens(self, tokens_a: Sequence[str], tokens_b: Sequence[str],
                           embedder: EmbedderIface) -> np.ndarray:
        vec, _, _ = self._encode_pair(embedder.encode_pair(tokens_a, tokens_b), False, None)
        self.reset()
        return vec

    def encode_feature_vector(self, fv: FeatureVector) -> np.ndarray:
        vec, _ = self._encode_features(fv.to_array(), False, None)
        self.reset()
        return vec


def classify(doc: PaperDoc, ref_id: str, model: MmaModel, embedder: EmbedderIface,
             lexicon: CueLexicon | None = None) -> Prediction:
    """Classify one reference of a document."""
    example = encode_example(doc, ref_id, embedder, lexicon, model.config.count_transform)
    return model.predict(example)

"""Embedding providers behind one small interface.

The model only needs two operations: per-token embeddings for a context
window, and layerwise hidden states for a concatenated text pair. The
hash-based embedder makes tests and toy training fully deterministic and
dependency-free; the pretrained binding adapts a scientific-text
transformer and is only imported on demand.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np

from ..context import ContextWindow
from .kernels import hash_embed

CLS_TOKEN = "<cls>"
SEP_TOKEN = "<sep>"

PRODUCTION_DIMENSION = 768
PRODUCTION_LAYER_COUNT = 13


class EmbedderIface(Protocol):
    dimension: int
    layer_count: int
    identifier: str

    def token_embed(self, window: ContextWindow) -> np.ndarray:
        """(rows, cols, dimension) embeddings for a context window."""

    def encode_pair(self, tokens_a: Sequence[str], tokens_b: Sequence[str]) -> np.ndarray:
        """(layer_count, sequence, dimension) hidden states for a joined pair."""


def _token_id(token: str, seed: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8,
                             key=seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


class HashEmbedder:
    """Deterministic pseudo-embeddings derived from token hashes.

    Every (token, layer) pair maps to a fixed vector with entries in
    (-1, 1), scaled by 1/sqrt(dimension); no trained weights, no I/O.
    """

    def __init__(self, dimension: int = 16, layer_count: int = 4, seed: int = 0,
                 max_pair_tokens: int = 64):
        if dimension <= 0 or layer_count <= 0 or max_pair_tokens < 3:
            raise ValueError("dimension, layer_count, and max_pair_tokens must be positive")
        self.dimension = dimension
        self.layer_count = layer_count
        self.seed = seed
        self.max_pair_tokens = max_pair_tokens
        self.identifier = f"hash/d{dimension}/l{layer_count}/s{seed}"
        self._scale = 1.0 / np.sqrt(dimension)
        self._cache: dict[str, int] = {}

    def _ids(self, tokens: Sequence[str], layer: int = 0) -> np.ndarray:
        ids = np.empty(len(tokens), dtype=np.uint64)
        salt = np.uint64(layer * 0x9E3779B97F4A7C15 % (1 << 64))
        for i, token in enumerate(tokens):
            cached = self._cache.get(token)
            if cached is None:
                cached = self._cache[token] = _token_id(token, self.seed)
            ids[i] = np.uint64(cached) ^ salt
        return ids

    def token_embed(self, window: ContextWindow) -> np.ndarray:
        flat = [token for row in window.sentences for token in row]
        vectors = hash_embed(self._ids(flat), self.dimension) * self._scale
        return vectors.reshape(window.rows, window.cols, self.dimension)

    def encode_pair(self, tokens_a: Sequence[str], tokens_b: Sequence[str]) -> np.ndarray:
        if not tokens_a or not tokens_b:
            raise ValueError("encode_pair requires two nonempty token sequences")
        joined = [CLS_TOKEN, *tokens_a, SEP_TOKEN, *tokens_b][: self.max_pair_tokens]
        layers = np.stack([
            hash_embed(self._ids(joined, layer), self.dimension) * self._scale
            for layer in range(self.layer_count)
        ])
        return layers


class PretrainedTransformerEmbedder:
    """Adapter over a HuggingFace masked-LM encoder (e.g. a SciBERT model).

    Word-level vectors are the first-subword hidden states of the last
    layer; pair encoding returns all hidden-state layers for the joined
    sequence. Requires ``torch`` and ``transformers``.
    """

    def __init__(self, model_name: str = "allenai/scibert_scivocab_uncased",
                 max_pair_tokens: int = 512, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise ImportError(
                "PretrainedTransformerEmbedder requires the 'torch' and "
                "'transformers' packages") from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModel.from_pretrained(model_name, output_hidden_states=True)
        self._model.eval().to(device)
        self._device = device
        self.max_pair_tokens = max_pair_tokens
        self.dimension = int(self._model.config.hidden_size)
        self.layer_count = int(self._model.config.num_hidden_layers) + 1
        self.identifier = f"pretrained/{model_name}/d{self.dimension}/l{self.layer_count}"

    def token_embed(self, window: ContextWindow) -> np.ndarray:  # pragma: no cover
        torch = self._torch
        out = np.zeros((window.rows, window.cols, self.dimension))
        for i, row in enumerate(window.sentences):
            words = [token for j, token in enumerate(row) if window.mask[i, j]]
            if not words:
                continue
            encoded = self._tokenizer(words, is_split_into_words=True, return_tensors="pt",
                                      truncation=True, max_length=self.max_pair_tokens)
            with torch.no_grad():
                hidden = self._model(**{k: v.to(self._device) for k, v in encoded.items()})
            states = hidden.last_hidden_state[0].cpu().numpy()
            word_ids = encoded.word_ids(0)
            seen: set[int] = set()
            for position, word_id in enumerate(word_ids):
                if word_id is None or word_id in seen or word_id >= window.cols:
                    continue
                seen.add(word_id)
                out[i, word_id] = states[position]
        return out

    def encode_pair(self, tokens_a, tokens_b) -> np.ndarray:  # pragma: no cover
        torch = self._torch
        if not tokens_a or not tokens_b:
            raise ValueError("encode_pair requires two nonempty token sequences")
        encoded = self._tokenizer(" ".join(tokens_a), " ".join(tokens_b), return_tensors="pt",
                                  truncation=True, max_length=self.max_pair_tokens)
        with torch.no_grad():
            hidden = self._model(**{k: v.to(self._device) for k, v in encoded.items()})
        return np.stack([layer[0].cpu().numpy() for layer in hidden.hidden_states])


def make_embedder(kind: str, dimension: int = PRODUCTION_DIMENSION,
                  layer_count: int = PRODUCTION_LAYER_COUNT, seed: int = 0,
                  max_pair_tokens: int = 128, model_name: str | None = None) -> EmbedderIface:
    if kind == "hash":
        return HashEmbedder(dimension=dimension, layer_count=layer_count, seed=seed,
                            max_pair_tokens=max_pair_tokens)
    if kind == "pretrained":
        return PretrainedTransformerEmbedder(model_name or "allenai/scibert_scivocab_uncased",
                                             max_pair_tokens=max_pair_tokens)
    raise ValueError(f"unknown embedder kind {kind!r}")

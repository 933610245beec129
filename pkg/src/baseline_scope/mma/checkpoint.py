"""Versioned model checkpoints.

A checkpoint is a compressed npz holding every parameter tensor plus a JSON
metadata record: format version, full model config, the cue-lexicon hash,
and the embedder identifier. Loading refuses mismatched lexicons or
embedders so a model is never silently applied to features it was not
trained on.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import MmaConfig, MmaModel

CHECKPOINT_VERSION = "mma-checkpoint/1"


class CheckpointError(Exception):
    """Unreadable or structurally invalid checkpoint."""


class CheckpointMismatchError(CheckpointError):
    """Checkpoint is valid but bound to a different lexicon/embedder/config."""


def save_checkpoint(path: str | Path, model: MmaModel, lexicon_sha256: str,
                    embedder_id: str, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "lexicon_sha256": lexicon_sha256,
        "embedder": embedder_id,
        "extra": extra or {},
    }
    arrays = {f"param/{name}": param for name, param, _ in model.named_parameters()}
    np.savez_compressed(path, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)
    return path


def read_meta(path: str | Path) -> dict:
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise CheckpointError(f"{path}: not a model checkpoint (no metadata record)")
        meta = json.loads(str(data["__meta__"]))
    if meta.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
    return meta


def load_checkpoint(path: str | Path, expected_lexicon_sha256: str | None = None,
                    expected_embedder: str | None = None) -> tuple[MmaModel, dict]:
    meta = read_meta(path)
    if expected_lexicon_sha256 is not None and meta["lexicon_sha256"] != expected_lexicon_sha256:
        raise CheckpointMismatchError(
            f"{path}: checkpoint was trained with a different cue lexicon "
            f"({meta['lexicon_sha256'][:12]}... vs {expected_lexicon_sha256[:12]}...)")
    if expected_embedder is not None and meta["embedder"] != expected_embedder:
        raise CheckpointMismatchError(
            f"{path}: checkpoint expects embedder {meta['embedder']!r}, got {expected_embedder!r}")
    config = MmaConfig.from_dict(meta["config"])
    model = MmaModel(config)
    with np.load(path, allow_pickle=False) as data:
        state = {key[len("param/"):]: data[key] for key in data.files if key.startswith("param/")}
    try:
        model.load_state_dict(state)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    return model, meta

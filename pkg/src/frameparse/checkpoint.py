"""Self-describing model checkpoints (a ``torch.save`` archive of plain containers)."""

from __future__ import annotations

import io
import json
import os
import pickle
import zipfile
from dataclasses import dataclass, field

import torch

from frameparse import model as M
from frameparse._io import atomic_open
from frameparse.codec import Vocabulary
from frameparse.corpus import Ontology

FORMAT = "frameparse-checkpoint/1"


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: M.FrameParserModel
    vocab: Vocabulary
    ontology: Ontology
    mode: str
    train_config: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    try:
        # metadata must survive a weights-only load, so keep it to plain containers
        json.dumps([ckpt.train_config, ckpt.history])
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint metadata is not plain data: {exc}") from None
    payload = {
        "format": FORMAT,
        "mode": ckpt.mode,
        "model_config": ckpt.model.config.to_dict(),
        "vocab_hash": ckpt.vocab.hash(),
        "vocab": list(ckpt.vocab.tokens),
        "ontology": ckpt.ontology.to_record()["ontology"],
        "train_config": dict(ckpt.train_config),
        "history": list(ckpt.history),
        "state_dict": {k: v.detach().clone() for k, v in ckpt.model.state_dict().items()},
    }
    buf = io.BytesIO()
    torch.save(payload, buf)
    with atomic_open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path, vocab: Vocabulary | None = None, mode: str | None = None) -> Checkpoint:
    """Load a checkpoint, refusing a vocabulary or mode that does not match the stored one."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except (RuntimeError, EOFError, zipfile.BadZipFile, pickle.UnpicklingError, OSError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} file")
    stored_vocab = Vocabulary(payload["vocab"])
    if stored_vocab.hash() != payload["vocab_hash"]:
        raise CheckpointError("stored vocabulary does not match its hash")
    if vocab is not None and vocab.hash() != payload["vocab_hash"]:
        raise CheckpointError("vocabulary hash mismatch: checkpoint was trained with a different vocabulary")
    if mode is not None and mode != payload["mode"]:
        raise CheckpointError(f"mode mismatch: checkpoint is {payload['mode']!r}, requested {mode!r}")
    config = M.ModelConfig(**payload["model_config"])
    model = M.FrameParserModel(config)
    try:
        model.load_state_dict(payload["state_dict"])
    except RuntimeError as exc:
        raise CheckpointError(f"parameter tensors do not match the stored config: {exc}") from None
    model.eval()
    body = payload["ontology"]
    ontology = Ontology(tuple(body["frames"]), tuple(body["roles"]), body.get("frame_roles"))
    return Checkpoint(model, stored_vocab, ontology, payload["mode"],
                      payload.get("train_config", {}), payload.get("history", []))

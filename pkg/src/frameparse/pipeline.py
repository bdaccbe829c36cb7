"""End-to-end inference: (sentence, trigger) -> frame interpretation.

Multi-task mode runs the frame classifier first and then decodes arguments with the
*predicted* frame written into the ``ARGS for <frame>:`` command.  Full-Gen mode decodes
the whole ``span = label |`` string in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import torch

from frameparse import model as M
from frameparse.codec import (
    UNK_FRAME,
    Vocabulary,
    args_input,
    frame_input,
    fullgen_parse,
    marked_text,
    multitask_parse_args,
    trigger_positions,
)
from frameparse.corpus import (
    AnnotatedExample,
    CorpusError,
    Ontology,
    RoleAssignment,
    TokenSpan,
    dumps_record,
    read_records,
)
from frameparse._io import atomic_open
from frameparse.training import FULLGEN, MODES, MULTITASK


@dataclass
class FrameInterpretation:
    frame: str
    roles: list[RoleAssignment]
    confidence: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    def to_record(self, tokens: Sequence[str], trigger: TokenSpan) -> dict:
        return {
            "tokens": list(tokens),
            "trigger": trigger.to_list(),
            "frame": self.frame,
            "roles": [{"label": r.label, "span": r.span.to_list()} for r in self.roles],
            "confidence": self.confidence,
            "diagnostics": list(self.diagnostics),
        }


def _dedupe(roles):
    return list(dict.fromkeys(roles))


def _restrict(roles, frame, ontology):
    if ontology is None or ontology.frame_roles is None:
        return roles
    allowed = ontology.frame_roles.get(frame, ())
    return [r for r in roles if r.label in allowed]


def _check_trigger(tokens, trigger):
    # raise early on caller mistakes; generations never raise
    AnnotatedExample(tuple(tokens), trigger, "_", ())


@torch.no_grad()
def _predict_fullgen_batch(model, vocab, items, gold_frames):
    ids = [vocab.encode(marked_text(toks, trig)) for toks, trig, _ in items]
    enc = M.encode(model, M.pad_batch(ids))
    prefix = None
    if gold_frames is not None:
        # force "<trigger> = <gold frame> |" and let the decoder fill in the roles
        prefix = [
            vocab.encode(f"{' '.join(toks[trig.start : trig.end + 1])} = {frame} |")
            for (toks, trig, _), frame in zip(items, gold_frames)
        ]
    outs = M.decode_greedy(model, enc, prefix=prefix)
    results = []
    for (toks, trig, _), out in zip(items, outs):
        ann = fullgen_parse(vocab.decode(out), toks, trig)
        results.append(FrameInterpretation(ann.frame, _dedupe(ann.roles), None, ann.diagnostics))
    return results


@torch.no_grad()
def _predict_multitask_batch(model, vocab, ontology, items, gold_frames):
    if gold_frames is None:
        ids = [vocab.encode(frame_input(toks, trig)) for toks, trig, _ in items]
        enc = M.encode(model, M.pad_batch(ids))
        probs = M.classify_frame(model, enc, [trigger_positions(i, vocab) for i in ids])
        conf, best = probs.max(-1)
        frames = [ontology.frames[k] for k in best.tolist()]
        confidences = conf.tolist()
    else:
        frames = list(gold_frames)
        confidences = [1.0] * len(frames)
    ids = [vocab.encode(args_input(toks, trig, f)) for (toks, trig, _), f in zip(items, frames)]
    outs = M.decode_greedy(model, M.encode(model, M.pad_batch(ids)))
    results = []
    for (toks, _trig, _), frame, p, out in zip(items, frames, confidences, outs):
        roles, diags = multitask_parse_args(vocab.decode(out), len(toks))
        results.append(FrameInterpretation(frame, _dedupe(roles), float(p), diags))
    return results


def batch_predict(model: M.FrameParserModel, vocab: Vocabulary, ontology: Ontology,
                  examples: Sequence[AnnotatedExample], mode: str, gold_frames: bool = False,
                  restrict_roles: bool = False, batch_size: int = 256) -> list[FrameInterpretation]:
    """Predict every example, preserving order.

    ``gold_frames`` conditions argument decoding on each example's gold frame instead of
    the model's choice.  ``restrict_roles`` drops roles the ontology does not list for the
    chosen frame.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    model.eval()
    examples = list(examples)
    results: list[FrameInterpretation] = []
    for s in range(0, len(examples), batch_size):
        chunk = examples[s : s + batch_size]
        items = [(ex.tokens, ex.trigger, ex.frame) for ex in chunk]
        golds = [ex.frame for ex in chunk] if gold_frames else None
        if mode == MULTITASK:
            results += _predict_multitask_batch(model, vocab, ontology, items, golds)
        else:
            results += _predict_fullgen_batch(model, vocab, items, golds)
    if restrict_roles:
        for r in results:
            r.roles = _restrict(r.roles, r.frame, ontology)
    return results


def predict_fullgen(model, vocab, tokens, trigger, gold_frame: str | None = None) -> FrameInterpretation:
    _check_trigger(tokens, trigger)
    golds = None if gold_frame is None else [gold_frame]
    return _predict_fullgen_batch(model.eval(), vocab, [(tuple(tokens), trigger, None)], golds)[0]


def predict_multitask(model, vocab, ontology, tokens, trigger,
                      gold_frame: str | None = None) -> FrameInterpretation:
    _check_trigger(tokens, trigger)
    golds = None if gold_frame is None else [gold_frame]
    return _predict_multitask_batch(model.eval(), vocab, ontology, [(tuple(tokens), trigger, None)], golds)[0]


def save_predictions(path, examples: Sequence[AnnotatedExample], preds: Sequence[FrameInterpretation],
                     ontology: Ontology) -> None:
    if len(examples) != len(preds):
        raise ValueError("examples and predictions differ in length")
    with atomic_open(path) as fh:
        fh.write(dumps_record(ontology.to_record()) + "\n")
        for ex, p in zip(examples, preds):
            fh.write(dumps_record(p.to_record(ex.tokens, ex.trigger)) + "\n")


@dataclass
class PredictionRecord:
    tokens: tuple[str, ...]
    trigger: TokenSpan
    frame: str
    roles: list[RoleAssignment]
    confidence: float | None
    diagnostics: list[str]


def load_predictions(path) -> list[PredictionRecord]:
    """Read a prediction file.  Labels are not checked against the ontology: a model may
    emit labels the ontology lacks, and those simply score as errors."""
    records = read_records(path)
    try:
        next(records)
    except StopIteration:
        raise CorpusError("empty prediction file: missing ontology header") from None
    out = []
    for lineno, rec in records:
        try:
            ex = AnnotatedExample.from_record(rec)
        except CorpusError as exc:
            raise CorpusError(str(exc), lineno) from None
        out.append(PredictionRecord(ex.tokens, ex.trigger, ex.frame, list(ex.roles),
                                    rec.get("confidence"), list(rec.get("diagnostics", []))))
    return out


__all__ = [
    "FULLGEN",
    "MULTITASK",
    "UNK_FRAME",
    "FrameInterpretation",
    "PredictionRecord",
    "batch_predict",
    "load_predictions",
    "predict_fullgen",
    "predict_multitask",
    "save_predictions",
]

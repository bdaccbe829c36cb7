"""Frame accuracy and the Exact / Soft / Global Match role metrics.

``preds`` and ``golds`` are aligned sequences of anything with ``.frame`` and ``.roles``
(``AnnotatedExample``, ``FrameInterpretation``, ``PredictionRecord``).

With ``frame_penalty`` (end-to-end scoring), an example whose predicted frame is wrong
contributes all its predicted roles as false positives and all its gold roles as false
negatives.  Gold-frame runs never trigger it.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from frameparse._io import atomic_open


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, p: float, r: float) -> "PRF":
        return cls(p, r, f1_score(p, r))

    def to_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class MatchReport:
    frame_accuracy: float
    exact: PRF
    soft: PRF
    global_: PRF
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "frame_accuracy": self.frame_accuracy,
            "exact": self.exact.to_dict(),
            "soft": self.soft.to_dict(),
            "global": self.global_.to_dict(),
            "counts": dict(self.counts),
        }

    def save(self, path) -> None:
        with atomic_open(path) as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def table(self) -> str:
        lines = [f"{'metric':<14}{'P':>8}{'R':>8}{'F1':>8}"]
        for name, prf in (("Exact Match", self.exact), ("Soft Match", self.soft),
                          ("Global Match", self.global_)):
            lines.append(f"{name:<14}{prf.precision:>8.4f}{prf.recall:>8.4f}{prf.f1:>8.4f}")
        lines.append(f"{'Frame acc.':<14}{self.frame_accuracy:>24.4f}")
        lines.append("  ".join(f"{k}={v}" for k, v in self.counts.items()))
        return "\n".join(lines)


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _ratio(num, den, both_empty: bool) -> float:
    if den == 0:
        return 1.0 if both_empty else 0.0
    return num / den


def _check_aligned(preds, golds):
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} gold examples")


def _role_sides(preds, golds, frame_penalty):
    """Yield per-example ``(pred_roles, gold_roles, comparable)``."""
    _check_aligned(preds, golds)
    for p, g in zip(preds, golds):
        yield list(p.roles), list(g.roles), not (frame_penalty and p.frame != g.frame)


def frame_accuracy(preds: Sequence, golds: Sequence) -> float:
    _check_aligned(preds, golds)
    if not golds:
        raise ValueError("frame accuracy of an empty test set")
    return sum(p.frame == g.frame for p, g in zip(preds, golds)) / len(golds)


def exact_counts(preds, golds, frame_penalty=True) -> tuple[int, int, int]:
    tp = fp = fn = 0
    for pr, gr, comparable in _role_sides(preds, golds, frame_penalty):
        pc = Counter((r.label, r.span) for r in pr)
        gc = Counter((r.label, r.span) for r in gr)
        hit = sum((pc & gc).values()) if comparable else 0
        tp += hit
        fp += len(pr) - hit
        fn += len(gr) - hit
    return tp, fp, fn


def _micro(tp, fp, fn) -> PRF:
    both_empty = tp + fp + fn == 0
    return PRF.from_pr(_ratio(tp, tp + fp, both_empty), _ratio(tp, tp + fn, both_empty))


def exact_match(preds, golds, frame_penalty: bool = True) -> PRF:
    """Micro P/R/F1 over (label, span) pairs; multiset intersection within each example."""
    return _micro(*exact_counts(preds, golds, frame_penalty))


def _token_pairs(roles):
    return {(r.label, t) for r in roles for t in r.span.indices()}


def global_counts(preds, golds, frame_penalty=True) -> tuple[int, int, int]:
    tp = fp = fn = 0
    for pr, gr, comparable in _role_sides(preds, golds, frame_penalty):
        ps, gs = _token_pairs(pr), _token_pairs(gr)
        hit = len(ps & gs) if comparable else 0
        tp += hit
        fp += len(ps) - hit
        fn += len(gs) - hit
    return tp, fp, fn


def global_match(preds, golds, frame_penalty: bool = True) -> PRF:
    """Micro P/R/F1 over (label, token) pairs, set semantics within each example."""
    return _micro(*global_counts(preds, golds, frame_penalty))


def pair_instances(pred_roles, gold_roles):
    """Greedy same-label pairing by descending token overlap; ties go to the earlier gold,
    then the earlier prediction.  Returns ``[(gold_i, pred_j, overlap)]``."""
    candidates = []
    for gi, g in enumerate(gold_roles):
        gt = set(g.span.indices())
        for pj, p in enumerate(pred_roles):
            if p.label == g.label:
                overlap = len(gt & set(p.span.indices()))
                if overlap:
                    candidates.append((-overlap, gi, pj))
    candidates.sort()
    used_g, used_p, pairs = set(), set(), []
    for neg, gi, pj in candidates:
        if gi not in used_g and pj not in used_p:
            used_g.add(gi)
            used_p.add(pj)
            pairs.append((gi, pj, -neg))
    return pairs


def soft_terms(preds, golds, frame_penalty=True):
    """Per-instance precision and recall terms (lists) entering the Soft Match averages."""
    p_terms, r_terms = [], []
    for pr, gr, comparable in _role_sides(preds, golds, frame_penalty):
        pairs = pair_instances(pr, gr) if comparable else []
        for gi, pj, overlap in pairs:
            p_terms.append(overlap / len(pr[pj].span))
            r_terms.append(overlap / len(gr[gi].span))
        p_terms += [0.0] * (len(pr) - len(pairs))
        r_terms += [0.0] * (len(gr) - len(pairs))
    return p_terms, r_terms


def soft_match(preds, golds, frame_penalty: bool = True) -> PRF:
    """Per-instance token P and R, averaged over role instances; F1 from the averages.

    A matched instance contributes to both averages, an unmatched gold instance only to
    recall (as 0) and an unmatched prediction only to precision (as 0).
    """
    p_terms, r_terms = soft_terms(preds, golds, frame_penalty)
    n_pred = sum(len(p.roles) for p in preds)
    n_gold = sum(len(g.roles) for g in golds)
    both_empty = n_pred == 0 and n_gold == 0
    p = _ratio(math.fsum(p_terms), len(p_terms), both_empty)
    r = _ratio(math.fsum(r_terms), len(r_terms), both_empty)
    return PRF.from_pr(p, r)


def evaluate(preds, golds, frame_penalty: bool = True) -> MatchReport:
    tp, fp, fn = exact_counts(preds, golds, frame_penalty)
    gtp, gfp, gfn = global_counts(preds, golds, frame_penalty)
    counts = {
        "instances": len(golds),
        "gold_roles": sum(len(g.roles) for g in golds),
        "pred_roles": sum(len(p.roles) for p in preds),
        "frame_correct": sum(p.frame == g.frame for p, g in zip(preds, golds)),
        "exact_tp": tp, "exact_fp": fp, "exact_fn": fn,
        "global_tp": gtp, "global_fp": gfp, "global_fn": gfn,
        "diagnostics": sum(len(getattr(p, "diagnostics", None) or []) for p in preds),
    }
    return MatchReport(
        frame_accuracy=frame_accuracy(preds, golds) if golds else 1.0,
        exact=_micro(tp, fp, fn),
        soft=soft_match(preds, golds, frame_penalty),
        global_=_micro(gtp, gfp, gfn),
        counts=counts,
    )


def score(pred_path, gold_path, frame_penalty: bool = True) -> MatchReport:
    """Score a prediction file against an annotation file, aligned record by record."""
    from frameparse.corpus import load_corpus
    from frameparse.pipeline import load_predictions

    golds = load_corpus(gold_path).examples
    preds = load_predictions(pred_path)
    if len(preds) != len(golds):
        raise ValueError(f"misaligned files: {len(preds)} predictions vs {len(golds)} gold records")
    for i, (p, g) in enumerate(zip(preds, golds)):
        if tuple(p.tokens) != tuple(g.tokens) or p.trigger != g.trigger:
            raise ValueError(f"misaligned files at record {i}: sentence or trigger differs")
    return evaluate(preds, list(golds), frame_penalty)

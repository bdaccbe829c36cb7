"""Annotated sentences, ontologies and the line-delimited annotation file format.

An annotation file is UTF-8 JSON Lines.  Line 1 is the ontology header::

    {"ontology": {"frames": [...], "roles": [...], "frame_roles": {...} | null}}

and every following line is one (sentence, trigger) record::

    {"tokens": ["The", "rain", ...], "trigger": [2, 2], "frame": "Fluidic_motion",
     "roles": [{"label": "Fluid", "span": [0, 1]}, ...]}

Spans are 0-based token indices, inclusive at both ends.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from frameparse._io import atomic_open

RESERVED_CHARS = ("*", "|", "=")


class CorpusError(ValueError):
    """Invalid annotation data.  ``line`` is the 1-based file line when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class TokenSpan:
    start: int
    end: int

    def __post_init__(self):
        if not (isinstance(self.start, int) and isinstance(self.end, int)):
            raise CorpusError(f"span bounds must be integers, got {self.start!r}, {self.end!r}")
        if not 0 <= self.start <= self.end:
            raise CorpusError(f"invalid span [{self.start}, {self.end}]")

    def __len__(self):
        return self.end - self.start + 1

    def indices(self) -> range:
        return range(self.start, self.end + 1)

    def fits(self, n_tokens: int) -> bool:
        return self.end < n_tokens

    def to_list(self) -> list[int]:
        return [self.start, self.end]


def check_label(label: str, what: str = "label") -> None:
    if not isinstance(label, str) or not label:
        raise CorpusError(f"{what} must be a non-empty string")
    bad = [c for c in RESERVED_CHARS if c in label]
    if bad:
        raise CorpusError(f"{what} {label!r} contains reserved character(s) {''.join(bad)}")
    # labels are split into words on single spaces downstream
    if label != " ".join(label.split()):
        raise CorpusError(f"{what} {label!r} has irregular whitespace")


def check_token(token: str) -> None:
    if not isinstance(token, str) or not token:
        raise CorpusError("tokens must be non-empty strings")
    if any(c.isspace() for c in token) or any(c in token for c in RESERVED_CHARS):
        raise CorpusError(f"token {token!r} contains whitespace or a reserved character")


@dataclass(frozen=True)
class RoleAssignment:
    label: str
    span: TokenSpan

    def __post_init__(self):
        check_label(self.label, "role label")


@dataclass(frozen=True)
class AnnotatedExample:
    tokens: tuple[str, ...]
    trigger: TokenSpan
    frame: str
    roles: tuple[RoleAssignment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "roles", tuple(self.roles))
        if not self.tokens:
            raise CorpusError("example has no tokens")
        for tok in self.tokens:
            check_token(tok)
        n = len(self.tokens)
        if not self.trigger.fits(n):
            raise CorpusError(f"trigger span {self.trigger.to_list()} out of range for {n} tokens")
        check_label(self.frame, "frame label")
        for role in self.roles:
            if not role.span.fits(n):
                raise CorpusError(
                    f"role {role.label!r} span {role.span.to_list()} out of range for {n} tokens"
                )

    def span_text(self, span: TokenSpan) -> str:
        return " ".join(self.tokens[span.start : span.end + 1])

    def to_record(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "trigger": self.trigger.to_list(),
            "frame": self.frame,
            "roles": [{"label": r.label, "span": r.span.to_list()} for r in self.roles],
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "AnnotatedExample":
        try:
            tokens = rec["tokens"]
            trigger = TokenSpan(*rec["trigger"])
            frame = rec["frame"]
            roles = [RoleAssignment(r["label"], TokenSpan(*r["span"])) for r in rec["roles"]]
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"malformed record: {exc!r}") from None
        if not isinstance(tokens, list):
            raise CorpusError("'tokens' must be an array")
        return cls(tuple(tokens), trigger, frame, tuple(roles))


@dataclass(frozen=True)
class Ontology:
    frames: tuple[str, ...]
    roles: tuple[str, ...]
    frame_roles: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "roles", tuple(self.roles))
        for kind, labels in (("frame", self.frames), ("role", self.roles)):
            for lab in labels:
                check_label(lab, f"{kind} label")
            if len(set(labels)) != len(labels):
                raise CorpusError(f"duplicate {kind} labels in ontology")
        if self.frame_roles is not None:
            fr = {f: tuple(rs) for f, rs in self.frame_roles.items()}
            for f, rs in fr.items():
                if f not in self.frames:
                    raise CorpusError(f"frame_roles names unknown frame {f!r}")
                unknown = [r for r in rs if r not in self.roles]
                if unknown:
                    raise CorpusError(f"frame_roles[{f!r}] names unknown roles {unknown}")
            object.__setattr__(self, "frame_roles", fr)

    def __hash__(self):
        return hash((self.frames, self.roles))

    def frame_index(self, label: str) -> int:
        return self.frames.index(label)

    def to_record(self) -> dict:
        fr = None
        if self.frame_roles is not None:
            fr = {f: list(rs) for f, rs in self.frame_roles.items()}
        return {"ontology": {"frames": list(self.frames), "roles": list(self.roles), "frame_roles": fr}}

    @classmethod
    def from_record(cls, rec: Mapping) -> "Ontology":
        try:
            body = rec["ontology"]
            return cls(tuple(body["frames"]), tuple(body["roles"]), body.get("frame_roles"))
        except (KeyError, TypeError, AttributeError) as exc:
            raise CorpusError(f"malformed ontology header: {exc!r}") from None


@dataclass(frozen=True)
class Corpus:
    examples: tuple[AnnotatedExample, ...]
    ontology: Ontology

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        frames, roles = set(self.ontology.frames), set(self.ontology.roles)
        for i, ex in enumerate(self.examples):
            _check_labels(ex, frames, roles, where=f"example {i}")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    def subset(self, indices: Iterable[int]) -> "Corpus":
        return Corpus(tuple(self.examples[i] for i in indices), self.ontology)


def _check_labels(ex, frames, roles, where, line=None):
    if ex.frame not in frames:
        raise CorpusError(f"{where}: unknown frame label {ex.frame!r}", line)
    for r in ex.roles:
        if r.label not in roles:
            raise CorpusError(f"{where}: unknown role label {r.label!r}", line)


def dumps_record(rec: Mapping) -> str:
    return json.dumps(rec, ensure_ascii=False)


def save_corpus(corpus: Corpus, path) -> None:
    with atomic_open(path) as fh:
        fh.write(dumps_record(corpus.ontology.to_record()) + "\n")
        for ex in corpus.examples:
            fh.write(dumps_record(ex.to_record()) + "\n")


def read_records(path):
    """Yield ``(line_number, record)`` for every non-blank line of a JSON Lines file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"not valid JSON ({exc.msg})", lineno) from None
            if not isinstance(rec, dict):
                raise CorpusError("record is not an object", lineno)
            yield lineno, rec


def load_corpus(path, ontology: Ontology | None = None) -> Corpus:
    """Read and validate an annotation file.

    Labels are checked against ``ontology`` when given, else against the file's header.
    """
    records = read_records(path)
    try:
        lineno, header = next(records)
    except StopIteration:
        raise CorpusError("empty file: missing ontology header") from None
    try:
        file_ontology = Ontology.from_record(header)
    except CorpusError as exc:
        raise CorpusError(str(exc), lineno) from None
    onto = ontology if ontology is not None else file_ontology
    frames, roles = set(onto.frames), set(onto.roles)
    examples = []
    for lineno, rec in records:
        try:
            ex = AnnotatedExample.from_record(rec)
        except CorpusError as exc:
            raise CorpusError(str(exc), lineno) from None
        _check_labels(ex, frames, roles, where="record", line=lineno)
        examples.append(ex)
    return Corpus(tuple(examples), onto)


def split_corpus(corpus: Corpus, ratios: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0):
    """Random train/dev/test partition.  Sizes are ``round(ratio * N)`` for the first two splits."""
    if len(ratios) != 3 or any((not math.isfinite(r)) or r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive fractions, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")
    n = len(corpus)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(ratios[0] * n))
    n_dev = min(int(round(ratios[1] * n)), n - n_train)
    parts = (order[:n_train], order[n_train : n_train + n_dev], order[n_train + n_dev :])
    return tuple(corpus.subset(int(i) for i in part) for part in parts)

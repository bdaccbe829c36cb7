"""Text encodings of frame parses and the word-level model vocabulary.

Full-Gen (one seq2seq task)::

    input   The rain * dripped * down his neck .
    target  dripped = Fluidic motion | The rain = Fluid | down his neck = Path |

Multi-task (frame classification, then arguments conditioned on the frame)::

    FRAME: 0 The 1 rain 2 * dripped * 3 down 4 his 5 neck 6 .         -> Fluidic motion
    ARGS for Fluidic motion: 0 The 1 rain 2 * dripped * 3 down ...     -> Fluid = 0-1 | Path = 3-5 |
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from frameparse.corpus import (
    AnnotatedExample,
    Corpus,
    CorpusError,
    RoleAssignment,
    TokenSpan,
    check_label,
)

MARK = "*"
SEP = "|"
EQ = "="
FRAME_COMMAND = "FRAME:"
UNK_FRAME = "<unk>"

_RANGE = re.compile(r"^(\d+)-(\d+)$")


class TaskKind(str, enum.Enum):
    FULLGEN = "fullgen"
    FRAME = "frame"
    ARGS = "args"


@dataclass(frozen=True)
class TaskExample:
    kind: TaskKind
    input_text: str
    target_text: str
    source: AnnotatedExample | None = None
    source_id: int | None = None


@dataclass
class FrameAnnotation:
    """A parsed model output; possibly partial, with the reasons for anything dropped."""

    frame: str
    roles: list[RoleAssignment]
    diagnostics: list[str] = field(default_factory=list)


def ordered_roles(roles: Iterable[RoleAssignment]) -> list[RoleAssignment]:
    # stable: equal starts keep gold order
    return sorted(roles, key=lambda r: r.span.start)


# --- Full-Gen -------------------------------------------------------------------------


def marked_text(tokens: Sequence[str], trigger: TokenSpan) -> str:
    words = list(tokens[: trigger.start]) + [MARK]
    words += tokens[trigger.start : trigger.end + 1]
    words += [MARK] + list(tokens[trigger.end + 1 :])
    return " ".join(words)


def fullgen_target(ex: AnnotatedExample) -> str:
    parts = [f"{ex.span_text(ex.trigger)} = {ex.frame} |"]
    parts += [f"{ex.span_text(r.span)} = {r.label} |" for r in ordered_roles(ex.roles)]
    return " ".join(parts)


def fullgen_encode(ex: AnnotatedExample, source_id: int | None = None) -> TaskExample:
    return TaskExample(
        TaskKind.FULLGEN, marked_text(ex.tokens, ex.trigger), fullgen_target(ex), ex, source_id
    )


def _segments(output: str) -> list[str]:
    return [seg.strip() for seg in output.split(SEP) if seg.strip()]


def _find(tokens: Sequence[str], words: Sequence[str]) -> int | None:
    n = len(words)
    for i in range(len(tokens) - n + 1):
        if list(tokens[i : i + n]) == list(words):
            return i
    return None


def fullgen_parse(output: str, tokens: Sequence[str], trigger: TokenSpan) -> FrameAnnotation:
    """Invert :func:`fullgen_target`, grounding each span at its leftmost occurrence.

    Never raises on bad generations: unusable segments are dropped and reported.
    """
    segments = _segments(output)
    if not segments:
        return FrameAnnotation(UNK_FRAME, [], ["empty output"])
    diagnostics = []
    frame_seg, *role_segs = segments
    key, sep, frame = frame_seg.partition(" = ")
    frame = frame.strip()
    if not sep or not frame:
        diagnostics.append(f"frame segment {frame_seg!r} has no ' = '")
        frame = UNK_FRAME
    elif any(c in frame for c in (MARK, SEP, EQ)):
        diagnostics.append(f"frame label {frame!r} contains a reserved character")
        frame = UNK_FRAME
    else:
        trigger_text = " ".join(tokens[trigger.start : trigger.end + 1])
        if key.strip() != trigger_text:
            diagnostics.append(f"frame segment key {key.strip()!r} is not the trigger {trigger_text!r}")
    roles = []
    for seg in role_segs:
        text, sep, label = seg.partition(" = ")
        label = label.strip()
        if not sep or not text.strip() or not label:
            diagnostics.append(f"segment {seg!r} has no ' = '")
            continue
        try:
            check_label(label)
        except CorpusError as exc:
            diagnostics.append(f"segment {seg!r}: {exc}")
            continue
        words = text.split()
        start = _find(tokens, words)
        if start is None:
            diagnostics.append(f"span text {text.strip()!r} not found in sentence")
            continue
        roles.append(RoleAssignment(label, TokenSpan(start, start + len(words) - 1)))
    return FrameAnnotation(frame, roles, diagnostics)


# --- multi-task -----------------------------------------------------------------------


def multitask_index_text(tokens: Sequence[str], trigger: TokenSpan) -> str:
    """Prefix every token with its index; the trigger tokens share the start index inside ``* *``."""
    words = []
    i = 0
    while i < len(tokens):
        words.append(str(i))
        if i == trigger.start:
            words.append(MARK)
            words.extend(tokens[trigger.start : trigger.end + 1])
            words.append(MARK)
            i = trigger.end + 1
        else:
            words.append(tokens[i])
            i += 1
    return " ".join(words)


def parse_index_text(text: str) -> tuple[list[str], TokenSpan]:
    """Recover ``(tokens, trigger)`` from :func:`multitask_index_text` output."""
    words = text.split(" ")
    tokens: list[str] = []
    trigger = None
    pos = 0
    while pos < len(words):
        if words[pos] != str(len(tokens)):
            raise ValueError(f"expected index {len(tokens)} at word {pos}, got {words[pos]!r}")
        pos += 1
        if pos < len(words) and words[pos] == MARK:
            if trigger is not None:
                raise ValueError("more than one trigger region")
            close = words.index(MARK, pos + 1)
            start = len(tokens)
            tokens.extend(words[pos + 1 : close])
            trigger = TokenSpan(start, len(tokens) - 1)
            pos = close + 1
        else:
            tokens.append(words[pos])
            pos += 1
    if trigger is None:
        raise ValueError("no trigger region")
    return tokens, trigger


def args_command(frame: str) -> str:
    return f"ARGS for {frame}:"


def frame_input(tokens: Sequence[str], trigger: TokenSpan) -> str:
    return f"{FRAME_COMMAND} {multitask_index_text(tokens, trigger)}"


def args_input(tokens: Sequence[str], trigger: TokenSpan, frame: str) -> str:
    return f"{args_command(frame)} {multitask_index_text(tokens, trigger)}"


def args_target(roles: Iterable[RoleAssignment]) -> str:
    return " ".join(f"{r.label} = {r.span.start}-{r.span.end} |" for r in ordered_roles(roles))


def multitask_encode(ex: AnnotatedExample, source_id: int | None = None) -> tuple[TaskExample, TaskExample]:
    frame_task = TaskExample(TaskKind.FRAME, frame_input(ex.tokens, ex.trigger), ex.frame, ex, source_id)
    args_task = TaskExample(
        TaskKind.ARGS, args_input(ex.tokens, ex.trigger, ex.frame), args_target(ex.roles), ex, source_id
    )
    return frame_task, args_task


def multitask_parse_args(output: str, sentence_len: int) -> tuple[list[RoleAssignment], list[str]]:
    """Parse ``Label = i-j |`` segments, keeping those with ``0 <= i <= j < sentence_len``."""
    if sentence_len < 1:
        raise ValueError("sentence_len must be >= 1")
    roles, diagnostics = [], []
    for seg in _segments(output):
        label, sep, rng = seg.partition(" = ")
        label = label.strip()
        m = _RANGE.match(rng.strip())
        if not sep or m is None:
            diagnostics.append(f"segment {seg!r} is not 'Label = i-j'")
            continue
        start, end = int(m.group(1)), int(m.group(2))
        if not 0 <= start <= end < sentence_len:
            diagnostics.append(f"segment {seg!r}: range out of bounds for {sentence_len} tokens")
            continue
        try:
            roles.append(RoleAssignment(label, TokenSpan(start, end)))
        except CorpusError as exc:
            diagnostics.append(f"segment {seg!r}: {exc}")
    return roles, diagnostics


def encode_example(ex: AnnotatedExample, multitask: bool, source_id: int | None = None) -> list[TaskExample]:
    if multitask:
        return list(multitask_encode(ex, source_id))
    return [fullgen_encode(ex, source_id)]


# --- vocabulary -----------------------------------------------------------------------

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
# joins its neighbours without spaces: "6-9" <-> ["6", HYPHEN, "9"]
HYPHEN = "@-@"
RESERVED = (PAD, BOS, EOS, UNK, MARK, SEP, EQ, HYPHEN, FRAME_COMMAND, "ARGS", "for")


def split_words(text: str) -> list[str]:
    words = []
    for w in text.split():
        m = _RANGE.match(w)
        if m:
            words += [m.group(1), HYPHEN, m.group(2)]
        else:
            words.append(w)
    return words


def join_words(words: Iterable[str]) -> str:
    out: list[str] = []
    glue = False
    for w in words:
        if w == HYPHEN:
            if out:
                out[-1] += "-"
            else:
                out.append("-")
            glue = True
        elif glue:
            out[-1] += w
            glue = False
        else:
            out.append(w)
    return " ".join(out)


class Vocabulary:
    """Word <-> id map.  Ids 0-3 are PAD, BOS, EOS, UNK."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tokens[:4] != [PAD, BOS, EOS, UNK]:
            raise ValueError("vocabulary must start with PAD, BOS, EOS, UNK")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate vocabulary entries")
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}
        self.pad_id, self.bos_id, self.eos_id, self.unk_id = 0, 1, 2, 3
        self.mark_id = self.index[MARK]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, word):
        return word in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def encode(self, text: str) -> list[int]:
        return [self.index.get(w, self.unk_id) for w in split_words(text)]

    def decode(self, ids: Iterable[int]) -> str:
        skip = (self.pad_id, self.bos_id, self.eos_id)
        return join_words(self.tokens[i] for i in ids if i not in skip)

    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()


def vocab_build(corpus: Corpus, max_len: int = 0) -> Vocabulary:
    """Vocabulary covering every string either codec produces for ``corpus``.

    Index words ``0 .. N-1`` are included for ``N = max(max_len, longest sentence)``.
    """
    n_index = max([max_len] + [len(ex.tokens) for ex in corpus])
    words = list(RESERVED) + [str(i) for i in range(n_index)]
    for frame in corpus.ontology.frames:
        words += split_words(frame) + split_words(args_command(frame))
    for role in corpus.ontology.roles:
        words += split_words(role)
    for ex in corpus:
        for task in encode_example(ex, False) + encode_example(ex, True):
            words += split_words(task.input_text) + split_words(task.target_text)
    return Vocabulary(dict.fromkeys(words))


def trigger_positions(ids: Sequence[int], vocab: Vocabulary) -> list[int]:
    """Positions strictly inside the first ``* ... *`` pair of an encoded input."""
    marks = [i for i, t in enumerate(ids) if t == vocab.mark_id]
    if len(marks) < 2:
        return []
    return list(range(marks[0] + 1, marks[1]))

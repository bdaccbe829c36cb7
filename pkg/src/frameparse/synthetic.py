"""Deterministic template-grammar corpus generator.

Every sentence comes from a frame template such as ``"{Agent} {V} {Theme} off {Source} ."``:
``{V}`` takes a trigger from the frame's lexicon and each ``{Role}`` slot takes a filler
phrase, so the gold trigger and role spans are known exactly.  Trigger words are shared
between frames (``got`` evokes both Arriving and Getting) so that the frame has to be
read off the context.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from frameparse.corpus import (
    AnnotatedExample,
    Corpus,
    CorpusError,
    Ontology,
    RoleAssignment,
    TokenSpan,
)

SLOT = re.compile(r"^\{([^{}]+)\}$")
TRIGGER_SLOT = "V"
MIN_AMBIGUOUS_FRACTION = 0.25


@dataclass
class FrameSpec:
    name: str
    roles: list[str]
    triggers: list[str]
    templates: list[str]
    # role -> phrases, overriding the generator-wide filler lists for this frame
    fillers: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class GeneratorSpec:
    frames: list[FrameSpec]
    roles: list[str]
    fillers: dict[str, list[str]]
    n_examples: int = 5000

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        try:
            frames = [FrameSpec(**f) for f in d["frames"]]
            return cls(frames, list(d["roles"]), dict(d["fillers"]), int(d.get("n_examples", 5000)))
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"malformed generator spec: {exc!r}") from None

    @classmethod
    def load(cls, path) -> "GeneratorSpec":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"generator spec is not valid JSON: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "frames": [vars(f) for f in self.frames],
            "roles": list(self.roles),
            "fillers": self.fillers,
            "n_examples": self.n_examples,
        }

    def ontology(self) -> Ontology:
        return Ontology(
            tuple(f.name for f in self.frames),
            tuple(self.roles),
            {f.name: tuple(f.roles) for f in self.frames},
        )

    def fillers_for(self, frame: FrameSpec, role: str) -> list[str]:
        return frame.fillers.get(role) or self.fillers.get(role, [])

    def ambiguous_fraction(self) -> float:
        owners: dict[str, set[str]] = {}
        for f in self.frames:
            for t in f.triggers:
                owners.setdefault(t, set()).add(f.name)
        if not owners:
            return 0.0
        return sum(len(v) >= 2 for v in owners.values()) / len(owners)

    def validate(self) -> None:
        if len(self.frames) < 2:
            raise CorpusError("generator spec needs at least 2 frames (trigger ambiguity)")
        if self.n_examples < 1:
            raise CorpusError("n_examples must be >= 1")
        if len(set(self.roles)) != len(self.roles):
            raise CorpusError("duplicate role labels")
        for f in self.frames:
            if not 1 <= len(f.roles) <= 4:
                raise CorpusError(f"frame {f.name!r} must have 1-4 roles, has {len(f.roles)}")
            if not f.templates:
                raise CorpusError(f"frame {f.name!r} has no templates")
            if not f.triggers:
                raise CorpusError(f"frame {f.name!r} has no trigger words")
            for role in f.roles:
                if role not in self.roles:
                    raise CorpusError(f"frame {f.name!r} uses undeclared role {role!r}")
                if not self.fillers_for(f, role):
                    raise CorpusError(f"no fillers for role {role!r} in frame {f.name!r}")
            for tpl in f.templates:
                slots = [m.group(1) for w in tpl.split() if (m := SLOT.match(w))]
                if slots.count(TRIGGER_SLOT) != 1:
                    raise CorpusError(f"template {tpl!r} must contain {{V}} exactly once")
                extra = [s for s in slots if s != TRIGGER_SLOT and s not in f.roles]
                if extra:
                    raise CorpusError(f"template {tpl!r} uses roles {extra} not in frame {f.name!r}")
                if len(set(slots)) != len(slots):
                    raise CorpusError(f"template {tpl!r} repeats a slot")
        frac = self.ambiguous_fraction()
        if frac < MIN_AMBIGUOUS_FRACTION:
            raise CorpusError(
                f"only {frac:.0%} of trigger words are shared by >=2 frames "
                f"(need {MIN_AMBIGUOUS_FRACTION:.0%})"
            )
        self.ontology()


def _fill(template: str, trigger: str, phrases: dict[str, str]):
    tokens: list[str] = []
    trigger_span = None
    spans = []
    for word in template.split():
        m = SLOT.match(word)
        if m is None:
            tokens.append(word)
            continue
        slot = m.group(1)
        start = len(tokens)
        tokens.extend((trigger if slot == TRIGGER_SLOT else phrases[slot]).split())
        span = TokenSpan(start, len(tokens) - 1)
        if slot == TRIGGER_SLOT:
            trigger_span = span
        else:
            spans.append(RoleAssignment(slot, span))
    return tokens, trigger_span, spans


def _grounds_uniquely(tokens, roles) -> bool:
    # the leftmost occurrence of each role's surface text must be the gold span
    for r in roles:
        n = len(r.span)
        target = tokens[r.span.start : r.span.end + 1]
        first = next(i for i in range(len(tokens) - n + 1) if tokens[i : i + n] == target)
        if first != r.span.start:
            return False
    return True


def generate_synthetic(spec: GeneratorSpec | None = None, seed: int = 1, max_tries: int = 100) -> Corpus:
    """Sample ``spec.n_examples`` annotated sentences; a pure function of ``(spec, seed)``."""
    spec = spec if spec is not None else default_generator_spec()
    spec.validate()
    rng = np.random.default_rng(seed)
    examples = []
    for _ in range(spec.n_examples):
        frame = spec.frames[rng.integers(len(spec.frames))]
        for _attempt in range(max_tries):
            template = frame.templates[rng.integers(len(frame.templates))]
            trigger = frame.triggers[rng.integers(len(frame.triggers))]
            phrases = {}
            for role in frame.roles:
                options = spec.fillers_for(frame, role)
                phrases[role] = options[rng.integers(len(options))]
            tokens, trig, roles = _fill(template, trigger, phrases)
            if _grounds_uniquely(tokens, roles):
                break
        else:
            raise CorpusError(f"could not fill frame {frame.name!r} without surface ambiguity")
        examples.append(AnnotatedExample(tuple(tokens), trig, frame.name, tuple(roles)))
    return Corpus(tuple(examples), spec.ontology())


def default_generator_spec(n_examples: int = 5000) -> GeneratorSpec:
    """Twelve frames over twenty roles; 10 of the 36 trigger words evoke more than one frame."""
    people = ["Mary", "the old man", "my neighbour", "the chef", "a tall woman", "John",
              "the children", "our teacher"]
    fillers = {
        "Agent": people,
        "Theme": ["the box", "a letter", "the old chair", "some books", "the red car",
                  "a small parcel", "the keys"],
        "Goal": ["the station", "the nearest bar", "the office", "her house", "the river bank",
                 "the top floor", "the market"],
        "Source": ["the shelf", "the kitchen", "the old barn", "his pocket", "the garden",
                   "the cellar"],
        "Time": ["at noon", "yesterday", "at 2pm", "in the morning", "last night", "on monday"],
        "Path": ["down his neck", "along the road", "through the park", "across the field",
                 "over the wall"],
        "Manner": ["quickly", "slowly", "with great care", "in silence", "carefully"],
        "Self_mover": ["most of the rest", "the runner", "two of the boys", "the tired soldier",
                       "a stray dog"],
        "Fluid": ["the rain", "cold water", "the wine", "warm milk", "the oil"],
        "Recipient": ["her brother", "the winner", "every guest", "the young nurse", "Peter"],
        "Ingestor": ["the hungry boy", "Anna", "the guests", "my cat", "the old farmer"],
        "Ingestibles": ["a sandwich", "some soup", "two apples", "the cake", "cold tea",
                        "a large pizza"],
        "Explanation": ["because she was hungry", "after the long walk", "to stay awake",
                        "for breakfast"],
        "Experiencer": ["She", "the critic", "my father", "everyone", "the little girl"],
        "Content": ["shopping for bargains", "the new film", "long walks", "street markets",
                    "old music"],
        "Speaker": ["the mayor", "a witness", "the doctor", "my aunt", "the spokesman"],
        "Message": ["that the road was closed", "that prices would rise", "the whole story",
                    "a short joke"],
        "Addressee": ["to the reporters", "to the class", "to her friend", "to the crowd"],
        "Owner": ["the farmer", "my uncle", "the company", "the museum", "Lucy"],
        "Possession": ["three horses", "a large house", "a rare painting", "two boats",
                       "an old map"],
    }
    frames = [
        FrameSpec("Arriving", ["Theme", "Goal", "Time"], ["got", "arrived", "came"],
                  ["{Theme} {V} to {Goal} {Time} .",
                   "{Theme} finally {V} to {Goal} .",
                   "{Time} , {Theme} {V} to {Goal} ."],
                  fillers={"Theme": ["Mary", "the train", "our guests", "the bus", "John"]}),
        FrameSpec("Getting", ["Recipient", "Theme", "Source"], ["got", "received", "obtained", "took"],
                  ["{Recipient} {V} {Theme} from {Source} .",
                   "{Recipient} {V} {Theme} .",
                   "from {Source} , {Recipient} {V} {Theme} ."]),
        FrameSpec("Self_motion", ["Self_mover", "Goal", "Path", "Manner"],
                  ["walked", "ran", "repaired", "passed", "set off"],
                  ["{Self_mover} {V} {Manner} to {Goal} .",
                   "{Self_mover} {V} {Path} .",
                   "Two of the cast fainted and {Self_mover} {V} to {Goal} .",
                   "{Self_mover} {V} {Path} to {Goal} ."]),
        FrameSpec("Fluidic_motion", ["Fluid", "Path", "Source"], ["dripped", "flowed", "ran", "drained"],
                  ["{Fluid} {V} {Path} .",
                   "{Fluid} {V} out of {Source} .",
                   "{Fluid} slowly {V} from {Source} {Path} ."]),
        FrameSpec("Emptying", ["Agent", "Source", "Theme", "Manner"], ["cleared", "emptied", "drained"],
                  ["{Agent} {V} {Source} .",
                   "{Agent} {V} {Source} of {Theme} {Manner} .",
                   "{Manner} , {Agent} {V} {Source} ."],
                  fillers={"Source": ["his throat", "the drawer", "the room", "the tank", "her bag"]}),
        FrameSpec("Removing", ["Agent", "Theme", "Source", "Time"], ["cleared", "took", "removed"],
                  ["{Agent} {V} {Theme} off {Source} .",
                   "{Agent} {V} {Theme} away from {Source} {Time} .",
                   "{Time} {Agent} {V} {Theme} off {Source} ."]),
        FrameSpec("Ingestion", ["Ingestor", "Ingestibles", "Time", "Explanation"],
                  ["ate", "had", "drank", "took", "enjoyed"],
                  ["{Ingestor} {V} {Ingestibles} {Time} .",
                   "{Ingestor} {V} {Ingestibles} {Explanation} .",
                   "{Time} {Ingestor} quietly {V} {Ingestibles} ."]),
        FrameSpec("Experiencer_focus", ["Experiencer", "Content"], ["adored", "loved", "hated", "enjoyed"],
                  ["{Experiencer} {V} {Content} .",
                   "{Experiencer} always {V} {Content} and would go often ."]),
        FrameSpec("Statement", ["Speaker", "Message", "Addressee", "Time"],
                  ["said", "stated", "mentioned", "explained"],
                  ["{Speaker} {V} {Message} .",
                   "{Speaker} {V} {Message} {Addressee} {Time} .",
                   "{Time} {Speaker} {V} {Addressee} {Message} ."]),
        FrameSpec("Giving", ["Agent", "Recipient", "Theme"], ["gave", "handed", "passed"],
                  ["{Agent} {V} {Theme} to {Recipient} .",
                   "{Agent} {V} {Recipient} {Theme} ."]),
        FrameSpec("Possession", ["Owner", "Possession"], ["had", "owned", "kept", "held"],
                  ["{Owner} {V} {Possession} .",
                   "{Owner} once {V} {Possession} in the valley ."]),
        FrameSpec("Placing", ["Agent", "Theme", "Goal", "Manner"], ["put", "placed", "set", "kept", "held"],
                  ["{Agent} {V} {Theme} on {Goal} {Manner} .",
                   "{Agent} {V} {Theme} on {Goal} ."],
                  fillers={"Goal": ["the table", "the top shelf", "the floor", "the bench"]}),
    ]
    roles = ["Agent", "Theme", "Goal", "Source", "Time", "Path", "Manner", "Self_mover", "Fluid",
             "Recipient", "Ingestor", "Ingestibles", "Explanation", "Experiencer", "Content",
             "Speaker", "Message", "Addressee", "Owner", "Possession"]
    return GeneratorSpec(frames, roles, fillers, n_examples)

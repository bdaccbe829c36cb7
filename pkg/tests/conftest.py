from collections import Counter

import pytest

from frameparse.codec import vocab_build
from frameparse.corpus import AnnotatedExample, Ontology, RoleAssignment, TokenSpan
from frameparse.model import ModelConfig
from frameparse.synthetic import default_generator_spec, generate_synthetic
from frameparse.training import TrainConfig, train

ONTOLOGY = Ontology(
    ("Fluidic_motion", "Emptying", "Self_motion", "Arriving"),
    ("Fluid", "Path", "Agent", "Source", "Self_mover", "Goal", "Theme", "Time"),
)


def role(label, s, e):
    return RoleAssignment(label, TokenSpan(s, e))


@pytest.fixture
def dripped():
    return AnnotatedExample(
        tuple("The rain dripped down his neck .".split()), TokenSpan(2, 2), "Fluidic motion",
        (role("Fluid", 0, 1), role("Path", 3, 5)),
    )


@pytest.fixture
def repaired():
    toks = "Two of the cast fainted and most of the rest repaired to the nearest bar .".split()
    return AnnotatedExample(tuple(toks), TokenSpan(10, 10), "Self_motion",
                            (role("Self_mover", 6, 9), role("Goal", 11, 14)))


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic(default_generator_spec(200), seed=3)


@pytest.fixture(scope="session")
def overfit_corpus():
    return generate_synthetic(default_generator_spec(50), seed=11)


@pytest.fixture(scope="session")
def overfit_runs(overfit_corpus):
    """Tiny models memorizing 50 examples, one per mode (shared by several test modules)."""
    vocab = vocab_build(overfit_corpus)
    cfg = ModelConfig.tiny(len(vocab), len(overfit_corpus.ontology.frames))
    tcfg = TrainConfig(epochs=200, batch_size=5)
    return {mode: train(overfit_corpus, None, mode, cfg, tcfg, vocab) for mode in ("fullgen", "multitask")}


DESK_SEEDS = (1, 2, 3)


class DeskRuns:
    """Default-corpus runs (5000 examples, 80/10/10, default configs, 5 epochs), trained on
    first use and cached for the session."""

    def __init__(self):
        self._cache = {}

    def get(self, mode, seed):
        key = (mode, seed)
        if key not in self._cache:
            from frameparse.corpus import split_corpus
            from frameparse.metrics import evaluate
            from frameparse.pipeline import batch_predict

            corpus = generate_synthetic(default_generator_spec(), seed=seed)
            tr, dev, test = split_corpus(corpus, (0.8, 0.1, 0.1), seed=seed)
            vocab = vocab_build(corpus)
            cfg = ModelConfig(len(vocab), len(corpus.ontology.frames), seed=seed)
            batches = {"total": 0, "single_task": 0, "coverage": {}}

            def hook(epoch, batch):
                batches["total"] += 1
                batches["single_task"] += all(e.kind == batch.kind for e in batch.examples)
                seen = batches["coverage"].setdefault(epoch, Counter())
                seen.update((e.kind, e.source_id) for e in batch.examples)

            result = train(tr, dev, mode, cfg, TrainConfig(seed=seed), vocab, batch_hook=hook)
            golds = list(test.examples)
            pred = batch_predict(result.model, vocab, corpus.ontology, golds, mode)
            gold_frame = batch_predict(result.model, vocab, corpus.ontology, golds, mode, gold_frames=True)
            self._cache[key] = {
                "result": result, "config": cfg, "vocab": vocab, "train": tr, "dev": dev, "test": test,
                "batches": batches,
                "pred": evaluate(pred, golds), "gold": evaluate(gold_frame, golds),
            }
        return self._cache[key]


@pytest.fixture(scope="session")
def desk_runs():
    return DeskRuns()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """``verdict(tag, ok, detail)`` prints one PASS/FAIL line and repeats it in the session summary."""

    def record(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (s[0], int(s[1:].split()[0]))):
            terminalreporter.write_line(line)

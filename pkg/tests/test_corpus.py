import json

import pytest
from hypothesis import given, settings

from frameparse.corpus import (
    AnnotatedExample,
    Corpus,
    CorpusError,
    Ontology,
    RoleAssignment,
    TokenSpan,
    load_corpus,
    save_corpus,
    split_corpus,
)
from frameparse.synthetic import default_generator_spec, generate_synthetic

from conftest import ONTOLOGY, role
from strategies import corpora


def write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def test_span_basics():
    s = TokenSpan(6, 9)
    assert len(s) == 4
    assert list(s.indices()) == [6, 7, 8, 9]
    assert s.fits(10) and not s.fits(9)
    with pytest.raises(CorpusError):
        TokenSpan(3, 2)
    with pytest.raises(CorpusError):
        TokenSpan(-1, 0)


@pytest.mark.parametrize("label", ["", "A=B", "A|B", "*A", "two  spaces", " lead"])
def test_bad_labels_rejected(label):
    with pytest.raises(CorpusError):
        RoleAssignment(label, TokenSpan(0, 0))


@pytest.mark.parametrize("tok", ["a b", "a*", "|", "x=y", ""])
def test_bad_tokens_rejected(tok):
    with pytest.raises(CorpusError):
        AnnotatedExample(("ok", tok), TokenSpan(0, 0), "F")


def test_example_span_ranges():
    with pytest.raises(CorpusError):
        AnnotatedExample(("a", "b"), TokenSpan(2, 2), "F")
    with pytest.raises(CorpusError):
        AnnotatedExample(("a", "b"), TokenSpan(0, 0), "F", (role("R", 1, 2),))
    # overlaps with each other and with the trigger are allowed
    AnnotatedExample(("a", "b", "c"), TokenSpan(1, 1), "F", (role("R", 0, 1), role("S", 1, 2)))


def test_ontology_duplicates():
    with pytest.raises(CorpusError):
        Ontology(("F", "F"), ("R",))
    with pytest.raises(CorpusError):
        Ontology(("F",), ("R",), {"F": ("Q",)})


def test_load_three_lines(tmp_path, dripped):
    ex = AnnotatedExample(dripped.tokens, dripped.trigger, "Fluidic_motion", dripped.roles)
    p = tmp_path / "c.jsonl"
    write_lines(p, [ONTOLOGY.to_record()] + [ex.to_record()] * 3)
    c = load_corpus(p)
    assert len(c) == 3 and c[0] == ex


def test_out_of_range_names_line(tmp_path, dripped):
    rec = dripped.to_record()
    rec["frame"] = "Fluidic_motion"
    bad = dict(rec, roles=[{"label": "Path", "span": [3, 7]}])
    p = tmp_path / "c.jsonl"
    write_lines(p, [ONTOLOGY.to_record(), rec, bad])
    with pytest.raises(CorpusError, match="line 3") as info:
        load_corpus(p)
    assert info.value.line == 3


@pytest.mark.parametrize("content,line", [
    ("", None),
    ('{"ontology": {"frames": ["F"], "roles": []}}\nnot json\n', 2),
    ('{"ontology": {"frames": ["F"], "roles": []}}\n{"tokens": ["a"], "trigger": [0, 0], "frame": "G", "roles": []}\n', 2),
    ('{"ontology": {"frames": ["F"], "roles": []}}\n{"tokens": ["a"], "frame": "F", "roles": []}\n', 2),
    ('{"frames": []}\n', 1),
])
def test_malformed_files(tmp_path, content, line):
    p = tmp_path / "c.jsonl"
    p.write_text(content, encoding="utf-8")
    with pytest.raises(CorpusError) as info:
        load_corpus(p)
    assert info.value.line == line


def test_dripped_byte_identical(tmp_path):
    onto = Ontology(("Fluidic motion",), ("Fluid", "Path"))
    text = (json.dumps(onto.to_record()) + "\n"
            + '{"tokens": ["The", "rain", "dripped", "down", "his", "neck", "."], "trigger": [2, 2], '
              '"frame": "Fluidic motion", "roles": [{"label": "Fluid", "span": [0, 1]}, '
              '{"label": "Path", "span": [3, 5]}]}\n')
    src, dst = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    src.write_text(text, encoding="utf-8")
    save_corpus(load_corpus(src), dst)
    assert dst.read_bytes() == src.read_bytes()


def test_empty_corpus_header_only(tmp_path):
    p = tmp_path / "c.jsonl"
    save_corpus(Corpus((), ONTOLOGY), p)
    assert p.read_text().splitlines() == [json.dumps(ONTOLOGY.to_record())]
    assert len(load_corpus(p)) == 0


def test_overlapping_roles_round_trip(tmp_path):
    ex = AnnotatedExample(tuple("a b c d".split()), TokenSpan(1, 1), "Arriving",
                          (role("Theme", 0, 2), role("Goal", 1, 3), role("Theme", 0, 2)))
    p = tmp_path / "c.jsonl"
    save_corpus(Corpus((ex,), ONTOLOGY), p)
    back = load_corpus(p)[0]
    assert back.tokens == ex.tokens and back.trigger == ex.trigger
    assert back.roles == ex.roles


def test_unicode_preserved(tmp_path):
    ex = AnnotatedExample(("Zoë", "ran", "→"), TokenSpan(1, 1), "Self_motion", (role("Self_mover", 0, 0),))
    p = tmp_path / "c.jsonl"
    save_corpus(Corpus((ex,), ONTOLOGY), p)
    assert load_corpus(p)[0] == ex


@settings(max_examples=100, deadline=None)
@given(corpora)
def test_round_trip_property(tmp_path_factory, corpus):
    p = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_corpus(corpus, p)
    assert load_corpus(p) == corpus


def _corpus(n):
    exs = [AnnotatedExample((f"w{i}",), TokenSpan(0, 0), "Arriving") for i in range(n)]
    return Corpus(tuple(exs), ONTOLOGY)


def test_split_sizes_and_determinism():
    assert tuple(len(s) for s in split_corpus(_corpus(10), (0.8, 0.1, 0.1), seed=7)) == (8, 1, 1)
    assert tuple(len(s) for s in split_corpus(_corpus(1000))) == (800, 100, 100)
    a = split_corpus(_corpus(50), seed=3)
    b = split_corpus(_corpus(50), seed=3)
    assert a == b
    assert split_corpus(_corpus(50), seed=4) != a


@pytest.mark.parametrize("n", [0, 1, 2, 7, 33, 101])
def test_split_partitions(n):
    c = _corpus(n)
    parts = split_corpus(c, seed=n)
    seen = sorted(ex.tokens[0] for part in parts for ex in part)
    assert seen == sorted(ex.tokens[0] for ex in c)


@pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.8, 0.1, 0.2), (1.0, 0.0, 0.0), (0.8, -0.1, 0.3)])
def test_split_bad_ratios(ratios):
    with pytest.raises(ValueError):
        split_corpus(_corpus(5), ratios)


def test_synthetic_file_round_trip(tmp_path):
    c = generate_synthetic(default_generator_spec(100), seed=5)
    p = tmp_path / "c.jsonl"
    save_corpus(c, p)
    assert load_corpus(p) == c


def test_atomic_save_leaves_no_partial_file(tmp_path):
    p = tmp_path / "c.jsonl"

    class Boom:
        ontology = ONTOLOGY

        @property
        def examples(self):
            raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        save_corpus(Boom(), p)
    assert list(tmp_path.iterdir()) == []

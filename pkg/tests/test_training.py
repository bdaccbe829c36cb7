from collections import Counter

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from frameparse import model as M
from frameparse.codec import TaskKind, vocab_build
from frameparse.training import (
    EncodedTask,
    LossBalancer,
    NumericalError,
    TaskBatch,
    TrainConfig,
    dev_frame_accuracy,
    encode_tasks,
    make_batches,
    train,
)

from conftest import DESK_SEEDS

A, B = TaskKind.FRAME, TaskKind.ARGS


def fake(kind, n):
    return [EncodedTask(kind, [1], [1], [0], 0, i) for i in range(n)]


def test_two_even_tasks():
    batches = make_batches({A: fake(A, 128), B: fake(B, 128)}, 64, seed=0)
    assert len(batches) == 4
    assert Counter(b.kind for b in batches) == {A: 2, B: 2}
    assert all(len(b) == 64 and {e.kind for e in b.examples} == {b.kind} for b in batches)


def test_single_task_plain_batches():
    batches = make_batches({A: fake(A, 10)}, 4, seed=1)
    assert [len(b) for b in batches] == [4, 4, 2]
    ids = [e.source_id for b in batches for e in b.examples]
    assert sorted(ids) == list(range(10)) and ids != list(range(10))


def test_uneven_tasks_multiset_fixed_order_varies():
    orders = set()
    for seed in range(100):
        batches = make_batches({A: fake(A, 192), B: fake(B, 64)}, 64, seed=seed)
        assert sorted(b.kind.value for b in batches) == ["args", "frame", "frame", "frame"]
        orders.add(tuple(b.kind for b in batches))
    assert len(orders) > 1


def test_alternate_round_robin():
    batches = make_batches({A: fake(A, 6), B: fake(B, 2)}, 1, seed=0, round_robin="alternate")
    kinds = [b.kind for b in batches]
    assert kinds[:4] == [B, A, B, A] and kinds[4:] == [A] * 4


def test_mixed_batch_rejected():
    with pytest.raises(ValueError):
        TaskBatch(A, fake(A, 1) + fake(B, 1))
    with pytest.raises(ValueError):
        make_batches({A: []}, 4, seed=0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(0, 40), st.integers(1, 9), st.integers(0, 10**6))
def test_batches_cover_each_example_once(na, nb, bs, seed):
    batches = make_batches({A: fake(A, na), B: fake(B, nb)}, bs, seed=seed)
    seen = Counter((e.kind, e.source_id) for b in batches for e in b.examples)
    assert seen == Counter([(A, i) for i in range(na)] + [(B, i) for i in range(nb)])
    assert all(len({e.kind for e in b.examples}) == 1 for b in batches)


def test_balancer_identical_losses():
    bal = LossBalancer(warmup_steps=0)
    for _ in range(200):
        assert bal.update(A, 1.7) == 1.0
        assert bal.update(B, 1.7) == 1.0


def test_balancer_single_task():
    bal = LossBalancer(warmup_steps=0)
    for loss in (5.0, 0.1, 3.0, 9.0):
        assert bal.update(A, loss) == 1.0


def test_balancer_warmup_and_limit():
    bal = LossBalancer(decay=0.9, warmup_steps=10)
    for step in range(1000):
        wa = bal.update(A, 2.0)
        wb = bal.update(B, 4.0)
        if bal.steps <= 10:
            assert wa == wb == 1.0
    assert abs(bal.weight(A) - 1.5) < 1e-6 and abs(bal.weight(B) - 0.75) < 1e-6
    assert abs(bal.weight(A) * bal.ema[A] - bal.weight(B) * bal.ema[B]) < 1e-6


def test_balancer_ema_closed_form():
    bal = LossBalancer(decay=0.5, warmup_steps=0)
    for loss in (4.0, 2.0, 2.0):
        bal.update(A, loss)
    assert bal.ema[A] == pytest.approx(0.25 * 4 + 0.25 * 2 + 0.5 * 2)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.floats(1e-6, 1e4)), min_size=1, max_size=200))
def test_balancer_weights_bounded(stream):
    bal = LossBalancer(warmup_steps=3)
    for is_a, loss in stream:
        w = bal.update(A if is_a else B, loss)
        assert 0.1 <= w <= 10
        assert all(0.1 <= x <= 10 for x in bal.weights().values())


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -1.0])
def test_balancer_rejects_bad_losses(bad):
    with pytest.raises(NumericalError):
        LossBalancer().update(A, bad)


def test_default_weight_clamp_inside_outer_bounds():
    cfg = TrainConfig()
    assert 0.1 <= cfg.weight_min <= 1 <= cfg.weight_max <= 10
    assert (cfg.epochs, cfg.learning_rate, cfg.batch_size) == (5, 1e-3, 64)
    with pytest.raises(ValueError):
        TrainConfig(weight_min=2.0)
    with pytest.raises(ValueError):
        TrainConfig(round_robin="sometimes")


@pytest.fixture(scope="module")
def mini(small_corpus):
    vocab = vocab_build(small_corpus)
    cfg = M.ModelConfig.tiny(len(vocab), len(small_corpus.ontology.frames))
    return small_corpus, vocab, cfg


def test_encode_tasks_groups(mini):
    corpus, vocab, cfg = mini
    g = encode_tasks(corpus, vocab, "multitask", cfg)
    assert set(g) == {A, B} and len(g[A]) == len(g[B]) == len(corpus)
    assert all(t.trigger for t in g[A])
    assert set(encode_tasks(corpus, vocab, "fullgen")) == {TaskKind.FULLGEN}
    with pytest.raises(ValueError):
        encode_tasks(corpus, vocab, "fullgen", M.ModelConfig.tiny(len(vocab), 12, max_input_len=5))
    with pytest.raises(ValueError):
        encode_tasks(corpus, vocab, "joint")


def test_epochs_zero_returns_initial(mini):
    corpus, vocab, cfg = mini
    res = train(corpus, None, "multitask", cfg, TrainConfig(epochs=0), vocab)
    assert res.history == []
    init = M.init_params(cfg).state_dict()
    assert all(torch.equal(v, init[k]) for k, v in res.model.state_dict().items())


@pytest.mark.parametrize("mode", ["fullgen", "multitask"])
def test_batch_discipline_full_run(mini, mode):
    corpus, vocab, cfg = mini
    seen = {}

    def hook(epoch, batch):
        assert all(e.kind == batch.kind for e in batch.examples)
        seen.setdefault(epoch, Counter()).update((e.kind, e.source_id) for e in batch.examples)

    train(corpus, None, mode, cfg, TrainConfig(epochs=2, batch_size=16), vocab, batch_hook=hook)
    kinds = [A, B] if mode == "multitask" else [TaskKind.FULLGEN]
    expected = Counter((k, i) for k in kinds for i in range(len(corpus)))
    assert seen[1] == expected and seen[2] == expected


def test_history_schema_and_determinism(mini):
    corpus, vocab, cfg = mini
    tc = TrainConfig(epochs=2, batch_size=32, warmup_steps=3)
    a = train(corpus, corpus.subset(range(20)), "multitask", cfg, tc, vocab)
    b = train(corpus, corpus.subset(range(20)), "multitask", cfg, tc, vocab)
    for rec in a.history:
        assert set(rec) == {"epoch", "steps", "loss", "weight", "dev_frame_accuracy", "seconds"}
        assert set(rec["loss"]) == set(rec["weight"]) == {"frame", "args"}
        assert 0 <= rec["dev_frame_accuracy"] <= 1
    strip = lambda h: [{k: v for k, v in r.items() if k != "seconds"} for r in h]
    assert strip(a.history) == strip(b.history)
    assert any(r["weight"]["frame"] != 1.0 for r in a.history)


def test_single_task_weights_one_matches_unbalanced(mini):
    corpus, vocab, cfg = mini
    tc = TrainConfig(epochs=2, batch_size=32, warmup_steps=0)
    a = train(corpus, None, "fullgen", cfg, tc, vocab)
    b = train(corpus, None, "fullgen", cfg, TrainConfig(epochs=2, batch_size=32, balance=False), vocab)
    assert [r["loss"] for r in a.history] == [r["loss"] for r in b.history]
    assert all(r["weight"] == {"fullgen": 1.0} for r in a.history)


def test_divergence_raises_with_last_good(mini):
    corpus, vocab, cfg = mini
    good = {}

    def poison(epoch, batch):
        if epoch == 2 and not good:
            good.update({k: v.clone() for k, v in model.state_dict().items()})
            with torch.no_grad():
                model.classifier.weight.fill_(float("nan"))
                model.tok_emb.weight.fill_(float("nan"))

    model = M.init_params(cfg)
    with pytest.raises(NumericalError) as info:
        train(corpus, None, "multitask", cfg, TrainConfig(epochs=3, batch_size=32), vocab,
              batch_hook=poison, model=model)
    state = info.value.last_good_state
    assert state is not None
    assert all(torch.equal(state[k], good[k]) for k in state)


def test_mismatched_config_rejected(mini):
    corpus, vocab, cfg = mini
    with pytest.raises(ValueError):
        train(corpus, None, "fullgen", M.ModelConfig.tiny(len(vocab) + 1, 12), TrainConfig(), vocab)
    with pytest.raises(ValueError):
        train(corpus, None, "fullgen", M.ModelConfig.tiny(len(vocab), 3), TrainConfig(), vocab)
    with pytest.raises(ValueError):
        train(corpus.subset([]), None, "fullgen", cfg, TrainConfig(), vocab)


@pytest.mark.parametrize("mode", ["fullgen", "multitask"])
def test_memorization_loss(overfit_runs, mode):
    assert all(v < 0.05 for v in overfit_runs[mode].history[-1]["loss"].values())


@pytest.mark.parametrize("seed", DESK_SEEDS)
def test_dev_accuracy_rises_early(desk_runs, seed):
    run = desk_runs.get("multitask", seed)
    init = dev_frame_accuracy(M.init_params(run["config"]), run["vocab"], run["dev"], "multitask")
    acc1, acc2 = (run["result"].history[i]["dev_frame_accuracy"] for i in (0, 1))
    print(f"seed {seed}: dev frame accuracy init {init:.3f}  epoch1 {acc1:.3f}  epoch2 {acc2:.3f}")
    assert init < acc1 <= acc2

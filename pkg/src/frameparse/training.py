"""Single-task batching, EMA loss balancing and the training loop for both modes."""

from __future__ import annotations

import copy
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import torch

from frameparse import model as M
from frameparse.codec import (
    TaskKind,
    Vocabulary,
    encode_example,
    fullgen_parse,
    marked_text,
    frame_input,
    trigger_positions,
)
from frameparse.corpus import Corpus

log = logging.getLogger(__name__)

FULLGEN, MULTITASK = "fullgen", "multitask"
MODES = (FULLGEN, MULTITASK)


class NumericalError(RuntimeError):
    """Training produced a non-finite loss.  ``last_good_state`` holds the weights from
    the start of the failing epoch."""

    def __init__(self, message, last_good_state=None):
        super().__init__(message)
        self.last_good_state = last_good_state


@dataclass
class TrainConfig:
    epochs: int = 5
    learning_rate: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    balancer_decay: float = 0.9
    warmup_steps: int = 50
    weight_min: float = 0.5
    weight_max: float = 2.0
    balance: bool = True
    # "random": pick uniformly among tasks with batches left; "alternate": strict rotation
    round_robin: str = "random"
    eval_batch_size: int = 256

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.warmup_steps < 0:
            raise ValueError("epochs, batch_size and warmup_steps must be non-negative / positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.weight_min <= 1 <= self.weight_max:
            raise ValueError("weight clamp must satisfy 0 < weight_min <= 1 <= weight_max")
        if not 0 < self.balancer_decay < 1:
            raise ValueError("balancer_decay must be in (0, 1)")
        if self.round_robin not in ("random", "alternate"):
            raise ValueError("round_robin must be 'random' or 'alternate'")

    def to_dict(self):
        return asdict(self)


@dataclass
class EncodedTask:
    kind: TaskKind
    src: list[int]
    tgt: list[int]
    trigger: list[int]
    frame_class: int
    source_id: int


@dataclass
class TaskBatch:
    kind: TaskKind
    examples: list

    def __post_init__(self):
        kinds = {ex.kind for ex in self.examples}
        if kinds - {self.kind}:
            raise ValueError(f"mixed-task batch: {sorted(k.value for k in kinds)}")

    def __len__(self):
        return len(self.examples)


def make_batches(tasks: Mapping[TaskKind, Sequence], batch_size: int, seed,
                 round_robin: str = "random") -> list[TaskBatch]:
    """Shuffle each task's examples, chunk them, and interleave the chunks task by task.

    With ``round_robin="random"`` each turn draws uniformly from the tasks that still have
    batches; ``"alternate"`` cycles through them in a fixed order.
    """
    rng = np.random.default_rng(seed)
    queues = {}
    for kind in sorted(tasks, key=lambda k: k.value):
        items = list(tasks[kind])
        if not items:
            continue
        order = rng.permutation(len(items))
        queues[kind] = [
            TaskBatch(kind, [items[i] for i in order[s : s + batch_size]])
            for s in range(0, len(items), batch_size)
        ]
    if not queues:
        raise ValueError("no task has any examples")
    batches = []
    turn = 0
    while queues:
        live = list(queues)
        if round_robin == "random":
            kind = live[rng.integers(len(live))]
        else:
            kind = live[turn % len(live)]
            turn += 1
        batches.append(queues[kind].pop(0))
        if not queues[kind]:
            del queues[kind]
            turn -= 1
    return batches


class LossBalancer:
    """Per-task weights ``mean(ema) / ema_k`` from exponential moving averages of raw losses.

    Weights are clamped to ``clamp`` and held at 1 for the first ``warmup_steps`` updates.
    """

    def __init__(self, decay=0.9, warmup_steps=50, clamp=(0.1, 10.0)):
        self.decay = decay
        self.warmup_steps = warmup_steps
        self.clamp = clamp
        self.ema: dict = {}
        self.steps = 0

    def update(self, kind, raw_loss: float) -> float:
        if not math.isfinite(raw_loss) or raw_loss < 0:
            raise NumericalError(f"{getattr(kind, 'value', kind)} loss is {raw_loss}")
        self.steps += 1
        if kind in self.ema:
            self.ema[kind] = self.decay * self.ema[kind] + (1.0 - self.decay) * raw_loss
        else:
            self.ema[kind] = raw_loss
        return self.weight(kind)

    def weight(self, kind) -> float:
        if self.steps <= self.warmup_steps or kind not in self.ema or len(self.ema) < 2:
            return 1.0
        ema = self.ema[kind]
        if ema <= 0:
            return self.clamp[1]
        mean = sum(self.ema.values()) / len(self.ema)
        return min(max(mean / ema, self.clamp[0]), self.clamp[1])

    def weights(self) -> dict:
        return {k: self.weight(k) for k in self.ema}


def encode_tasks(corpus: Corpus, vocab: Vocabulary, mode: str, config: M.ModelConfig | None = None):
    """Encode every example into per-task id lists, grouped by task kind."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    grouped: dict[TaskKind, list[EncodedTask]] = {}
    frames = corpus.ontology.frames
    for i, ex in enumerate(corpus):
        for task in encode_example(ex, mode == MULTITASK, source_id=i):
            src = vocab.encode(task.input_text)
            tgt = vocab.encode(task.target_text)
            if config is not None:
                if len(src) > config.max_input_len:
                    raise ValueError(f"example {i}: input of {len(src)} ids exceeds max_input_len")
                if len(tgt) > config.max_output_len:
                    raise ValueError(f"example {i}: target of {len(tgt)} ids exceeds max_output_len")
            enc = EncodedTask(task.kind, src, tgt, trigger_positions(src, vocab), frames.index(ex.frame), i)
            grouped.setdefault(task.kind, []).append(enc)
    return grouped


def batch_loss(model, batch: TaskBatch):
    src = M.pad_batch([t.src for t in batch.examples])
    if batch.kind == TaskKind.FRAME:
        trig = [t.trigger for t in batch.examples]
        return M.class_loss(model, src, trig, [t.frame_class for t in batch.examples])
    return M.seq_loss(model, src, [t.tgt for t in batch.examples])


@torch.no_grad()
def dev_frame_accuracy(model, vocab: Vocabulary, corpus: Corpus, mode: str, batch_size: int = 256) -> float:
    if len(corpus) == 0:
        return float("nan")
    was_training = model.training
    model.eval()
    correct = 0
    frames = corpus.ontology.frames
    for s in range(0, len(corpus), batch_size):
        chunk = corpus.examples[s : s + batch_size]
        if mode == MULTITASK:
            ids = [vocab.encode(frame_input(ex.tokens, ex.trigger)) for ex in chunk]
            enc = M.encode(model, M.pad_batch(ids))
            probs = M.classify_frame(model, enc, [trigger_positions(i, vocab) for i in ids])
            pred = [frames[k] for k in probs.argmax(-1).tolist()]
        else:
            ids = [vocab.encode(marked_text(ex.tokens, ex.trigger)) for ex in chunk]
            out = M.decode_greedy(model, M.encode(model, M.pad_batch(ids)))
            pred = [fullgen_parse(vocab.decode(o), ex.tokens, ex.trigger).frame for o, ex in zip(out, chunk)]
        correct += sum(p == ex.frame for p, ex in zip(pred, chunk))
    model.train(was_training)
    return correct / len(corpus)


@dataclass
class TrainResult:
    model: M.FrameParserModel
    vocab: Vocabulary
    mode: str
    history: list[dict] = field(default_factory=list)


def train(train_corpus: Corpus, dev_corpus: Corpus | None, mode: str, model_config: M.ModelConfig,
          train_config: TrainConfig, vocab: Vocabulary,
          batch_hook: Callable[[int, TaskBatch], None] | None = None,
          model: M.FrameParserModel | None = None) -> TrainResult:
    """Train a model in ``fullgen`` or ``multitask`` mode.

    Each history record holds, per epoch, the mean raw loss and last weight of every task
    plus the dev-set frame accuracy.  ``batch_hook(epoch, batch)`` sees every batch before
    its update.
    """
    if len(train_corpus) == 0:
        raise ValueError("empty training corpus")
    if model_config.vocab_size != len(vocab):
        raise ValueError(f"model vocab_size {model_config.vocab_size} != vocabulary size {len(vocab)}")
    if model_config.num_frame_classes != len(train_corpus.ontology.frames):
        raise ValueError("num_frame_classes does not match the ontology")
    tasks = encode_tasks(train_corpus, vocab, mode, model_config)
    torch.manual_seed(train_config.seed)
    model = model if model is not None else M.init_params(model_config)
    result = TrainResult(model, vocab, mode)
    if train_config.epochs == 0:
        return result
    opt = torch.optim.AdamW(
        model.parameters(),
        lr=train_config.learning_rate,
        betas=(train_config.beta1, train_config.beta2),
        eps=train_config.adam_eps,
        weight_decay=0.0,
    )
    balancer = LossBalancer(train_config.balancer_decay, train_config.warmup_steps,
                            (train_config.weight_min, train_config.weight_max))
    for epoch in range(1, train_config.epochs + 1):
        t0 = time.perf_counter()
        last_good = copy.deepcopy(model.state_dict())
        model.train()
        sums: dict[TaskKind, float] = {}
        counts: dict[TaskKind, int] = {}
        weights: dict[TaskKind, float] = {}
        batches = make_batches(tasks, train_config.batch_size, [train_config.seed, epoch],
                               train_config.round_robin)
        for batch in batches:
            if batch_hook is not None:
                batch_hook(epoch, batch)
            loss = batch_loss(model, batch)
            raw = float(loss.detach())
            try:
                w = balancer.update(batch.kind, raw) if train_config.balance else 1.0
            except NumericalError as exc:
                raise NumericalError(f"epoch {epoch}: {exc}", last_good) from None
            opt.zero_grad(set_to_none=True)
            (w * loss).backward()
            opt.step()
            sums[batch.kind] = sums.get(batch.kind, 0.0) + raw
            counts[batch.kind] = counts.get(batch.kind, 0) + 1
            weights[batch.kind] = w
        record = {
            "epoch": epoch,
            "steps": len(batches),
            "loss": {k.value: sums[k] / counts[k] for k in sorted(sums, key=lambda k: k.value)},
            "weight": {k.value: weights[k] for k in sorted(weights, key=lambda k: k.value)},
        }
        if dev_corpus is not None and len(dev_corpus):
            record["dev_frame_accuracy"] = dev_frame_accuracy(
                model, vocab, dev_corpus, mode, train_config.eval_batch_size
            )
        record["seconds"] = round(time.perf_counter() - t0, 3)
        result.history.append(record)
        log.info(
            "epoch %d  %s  dev_frame_acc=%s  (%.1fs)",
            epoch,
            "  ".join(f"{k}: loss={v:.4f} w={record['weight'][k]:.3f}" for k, v in record["loss"].items()),
            f"{record['dev_frame_accuracy']:.4f}" if "dev_frame_accuracy" in record else "-",
            record["seconds"],
        )
    model.eval()
    return result

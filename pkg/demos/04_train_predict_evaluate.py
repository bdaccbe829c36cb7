"""
Training both parsers and comparing GOLD and PRED frames
========================================================

About a minute on one CPU core.  Half the default corpus with half-size batches gives the
same number of updates as the full 5000-example, batch-64 setting.
"""

import logging
import tempfile
from pathlib import Path

from frameparse import (
    ModelConfig, TrainConfig, batch_predict, default_generator_spec, evaluate,
    generate_synthetic, load_checkpoint, save_checkpoint, split_corpus, train, vocab_build,
)
from frameparse.checkpoint import Checkpoint

logging.basicConfig(level=logging.INFO, format="%(message)s")
n, batch_size = 2500, 32

corpus = generate_synthetic(default_generator_spec(n), seed=1)
train_set, dev_set, test_set = split_corpus(corpus, (0.8, 0.1, 0.1), seed=1)
vocab = vocab_build(corpus)
config = ModelConfig(len(vocab), len(corpus.ontology.frames))

for mode in ("multitask", "fullgen"):
    result = train(train_set, dev_set, mode, config, TrainConfig(batch_size=batch_size), vocab)

    # PRED: the model picks the frame; GOLD: the gold frame is given
    for gold_frames in (False, True):
        preds = batch_predict(result.model, vocab, corpus.ontology, test_set.examples, mode,
                              gold_frames=gold_frames)
        print(f"\n{mode} {'GOLD' if gold_frames else 'PRED'} frames")
        print(evaluate(preds, list(test_set.examples)).table())

# checkpoints carry the vocabulary, so predictions need nothing else
with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "model.pt"
    save_checkpoint(path, Checkpoint(result.model, vocab, corpus.ontology, "fullgen"))
    ckpt = load_checkpoint(path, mode="fullgen")
    ex = test_set[0]
    print("\n", " ".join(ex.tokens), "->",
          batch_predict(ckpt.model, ckpt.vocab, ckpt.ontology, [ex], "fullgen")[0])

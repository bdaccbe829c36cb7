"""
Synthetic corpora and the two text encodings
============================================

"""

from frameparse import generate_synthetic, default_generator_spec, vocab_build
from frameparse.codec import fullgen_encode, fullgen_parse, multitask_encode, multitask_parse_args

# a small corpus from the built-in 12-frame grammar; same seed, same corpus
corpus = generate_synthetic(default_generator_spec(n_examples=200), seed=1)
print(len(corpus), "examples over", len(corpus.ontology.frames), "frames")

ex = corpus[0]
print(" ".join(ex.tokens), "| trigger", ex.trigger.to_list(), "| frame", ex.frame)

# Full-Gen: one string holding the frame and every role as surface text
task = fullgen_encode(ex)
print(task.input_text)
print("  ->", task.target_text)

# parsing grounds each span at its leftmost occurrence in the sentence
ann = fullgen_parse(task.target_text, ex.tokens, ex.trigger)
assert ann.frame == ex.frame and set(ann.roles) == set(ex.roles)

# multi-task: an indexed sentence, a frame command, and an argument command
frame_task, args_task = multitask_encode(ex)
print(frame_task.input_text, "  ->", frame_task.target_text)
print(args_task.input_text, "  ->", args_task.target_text)
roles, diagnostics = multitask_parse_args(args_task.target_text, len(ex.tokens))
assert sorted(roles, key=lambda r: r.span.start) == sorted(ex.roles, key=lambda r: r.span.start)

# model generations are parsed leniently: bad segments are dropped and explained
print(multitask_parse_args("Goal = 3-99 | Theme 1-2 |", len(ex.tokens)))

# one word-level vocabulary covers every string either encoding can produce
vocab = vocab_build(corpus)
ids = vocab.encode(args_task.target_text)
print(len(vocab), "words;", ids[:8], "->", vocab.decode(ids))

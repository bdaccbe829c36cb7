"""Command-line entry point: ``frameparse {gen-corpus,train,predict,evaluate,gradcheck}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import fields, replace

from frameparse import model as M
from frameparse._io import atomic_open
from frameparse.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from frameparse.codec import TaskKind, encode_example, trigger_positions, vocab_build
from frameparse.corpus import CorpusError, load_corpus, save_corpus, split_corpus
from frameparse.gradcheck import grad_check
from frameparse.metrics import score
from frameparse.pipeline import batch_predict, save_predictions
from frameparse.synthetic import GeneratorSpec, default_generator_spec, generate_synthetic
from frameparse.training import MODES, NumericalError, TrainConfig, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

FORMATS = """\
file formats:
  annotation file   JSON Lines; line 1 {"ontology": {"frames": [...], "roles": [...],
                    "frame_roles": {...}|null}}, then one record per (sentence, trigger):
                    {"tokens": [...], "trigger": [s, e], "frame": "F",
                     "roles": [{"label": "R", "span": [s, e]}, ...]}
                    spans are 0-based and inclusive; tokens may not contain whitespace,
                    '*', '|' or '='.
  prediction file   the annotation format plus "confidence" (float or null) and
                    "diagnostics" (list of strings) on every record.
  generator spec    JSON {"frames": [{"name", "roles", "triggers", "templates",
                    "fillers"?}], "roles": [...], "fillers": {role: [phrases]},
                    "n_examples": N}; templates use {V} for the trigger, {Role} for slots.
  checkpoint        torch archive with model config, vocabulary (+hash), ontology,
                    mode, train config, history and parameter tensors.
  history file      JSON Lines, one record per epoch: loss and weight per task,
                    dev_frame_accuracy, steps, seconds.
  config file       plain 'key = value' lines naming model/train settings
                    (embed_dim, num_layers, epochs, learning_rate, ...); flags win.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


FLAG_HELP = {
    "embed_dim": "model width", "num_layers": "encoder and decoder layers (each)",
    "num_heads": "attention heads", "ffn_dim": "feed-forward hidden size",
    "max_input_len": "longest encoder input in tokens", "max_output_len": "longest generation in tokens",
    "dropout_rate": "dropout probability", "pooling": "classifier pooling: trigger or mean",
    "epochs": "passes over the training data", "learning_rate": "optimizer step size",
    "batch_size": "examples per batch", "seed": "shuffling seed",
    "balancer_decay": "EMA decay of the per-task loss balancer",
    "warmup_steps": "steps before task weights leave 1.0",
    "weight_min": "lower clamp on task weights", "weight_max": "upper clamp on task weights",
    "round_robin": "task order: random or alternate",
}

MODEL_FLAGS = {
    "embed_dim": int, "num_layers": int, "num_heads": int, "ffn_dim": int,
    "max_input_len": int, "max_output_len": int, "dropout_rate": float, "pooling": str,
}
FLAG_CHOICES = {"pooling": ("trigger", "mean"), "round_robin": ("random", "alternate")}

TRAIN_FLAGS = {
    "epochs": int, "learning_rate": float, "batch_size": int, "seed": int,
    "balancer_decay": float, "warmup_steps": int, "weight_min": float, "weight_max": float,
    "round_robin": str,
}


def _add_config_flags(p, model=True, train=True):
    p.add_argument("--config", help="plain-text 'key = value' settings file (flags override it)")
    if model:
        g = p.add_argument_group("model settings")
        for name, typ in MODEL_FLAGS.items():
            g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                           choices=FLAG_CHOICES.get(name), help=FLAG_HELP[name])
        g.add_argument("--model-seed", type=int, default=None, help="parameter init seed")
    if train:
        g = p.add_argument_group("training settings")
        for name, typ in TRAIN_FLAGS.items():
            g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                           choices=FLAG_CHOICES.get(name), help=FLAG_HELP[name])
        g.add_argument("--no-balance", action="store_true", help="fix all task weights at 1")


def _read_config(path) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[settings]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    return dict(parser["settings"])


def _settings(args, table):
    values = {}
    file_values = _read_config(getattr(args, "config", None))
    known = set(MODEL_FLAGS) | set(TRAIN_FLAGS) | {"model_seed", "balance"}
    unknown = set(file_values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name, typ in table.items():
        if name in file_values:
            try:
                values[name] = typ(file_values[name])
            except ValueError:
                raise UsageError(f"config key {name}: cannot parse {file_values[name]!r}") from None
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return values, file_values


def _model_config(args, vocab_size, n_frames, base=None):
    values, file_values = _settings(args, MODEL_FLAGS)
    seed = args.model_seed if args.model_seed is not None else file_values.get("model_seed")
    if seed is not None:
        values["seed"] = int(seed)
    try:
        if base is not None:
            return replace(base, **values)
        return M.ModelConfig(vocab_size, n_frames, **values)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad model settings: {exc}") from None


def _train_config(args):
    values, file_values = _settings(args, TRAIN_FLAGS)
    if args.no_balance or file_values.get("balance", "true").lower() in ("0", "false", "no"):
        values["balance"] = False
    try:
        return TrainConfig(**values)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad training settings: {exc}") from None


# --- commands -------------------------------------------------------------------------


def cmd_gen_corpus(args) -> int:
    spec = GeneratorSpec.load(args.spec) if args.spec else default_generator_spec()
    if args.n_examples is not None:
        spec.n_examples = args.n_examples
    corpus = generate_synthetic(spec, seed=args.seed)
    save_corpus(corpus, args.out)
    with atomic_open(args.out + ".spec.json") as fh:
        json.dump({"seed": args.seed, "spec": spec.to_dict()}, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(corpus)} examples to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.train_corpus:
        train_c = load_corpus(args.train_corpus)
        dev_c = load_corpus(args.dev_corpus, train_c.ontology) if args.dev_corpus else None
        full = [train_c] + ([dev_c] if dev_c else [])
    else:
        if not args.corpus:
            raise UsageError("give --corpus, or --train-corpus [--dev-corpus]")
        corpus = load_corpus(args.corpus)
        train_c, dev_c, test_c = split_corpus(corpus, (0.8, 0.1, 0.1), args.split_seed)
        full = [corpus]
        if args.save_splits:
            for name, part in (("train", train_c), ("dev", dev_c), ("test", test_c)):
                save_corpus(part, f"{args.save_splits}.{name}.jsonl")
    from frameparse.corpus import Corpus

    vocab = vocab_build(Corpus(tuple(ex for c in full for ex in c), train_c.ontology))
    mcfg = _model_config(args, len(vocab), len(train_c.ontology.frames))
    tcfg = _train_config(args)
    try:
        result = train(train_c, dev_c, args.mode, mcfg, tcfg, vocab)
    except NumericalError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        if exc.last_good_state is not None:
            model = M.FrameParserModel(mcfg)
            model.load_state_dict(exc.last_good_state)
            save_checkpoint(args.out + ".last_good", Checkpoint(model, vocab, train_c.ontology, args.mode,
                                                                tcfg.to_dict()))
            print(f"last good weights saved to {args.out}.last_good", file=sys.stderr)
        return EXIT_NUMERIC
    save_checkpoint(args.out, Checkpoint(result.model, vocab, train_c.ontology, args.mode,
                                         tcfg.to_dict(), result.history))
    history = args.history or args.out + ".history.jsonl"
    with atomic_open(history) as fh:
        for rec in result.history:
            fh.write(json.dumps(rec) + "\n")
    print(f"wrote checkpoint {args.out} and history {history}")
    return EXIT_OK


def cmd_predict(args) -> int:
    ckpt = load_checkpoint(args.checkpoint, mode=args.mode)
    corpus = load_corpus(args.corpus, ckpt.ontology)
    preds = batch_predict(ckpt.model, ckpt.vocab, ckpt.ontology, corpus.examples, ckpt.mode,
                          gold_frames=args.gold_frames, restrict_roles=args.restrict_roles)
    save_predictions(args.out, corpus.examples, preds, ckpt.ontology)
    n_diag = sum(len(p.diagnostics) for p in preds)
    print(f"wrote {len(preds)} predictions to {args.out} ({n_diag} parse diagnostics)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    report = score(args.pred, args.gold, frame_penalty=not args.no_frame_penalty)
    if args.report:
        report.save(args.report)
    print(report.table())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    corpus = generate_synthetic(default_generator_spec(4), seed=args.seed)
    vocab = vocab_build(corpus)
    base = M.ModelConfig.tiny(len(vocab), len(corpus.ontology.frames), max_input_len=64, max_output_len=40)
    cfg = _model_config(args, len(vocab), len(corpus.ontology.frames), base=base)
    ex = corpus[0]
    args_task = [t for t in encode_example(ex, True) if t.kind == TaskKind.ARGS][0]
    frame_task = [t for t in encode_example(ex, True) if t.kind == TaskKind.FRAME][0]
    src_args, tgt = vocab.encode(args_task.input_text), vocab.encode(args_task.target_text)
    src_frame = vocab.encode(frame_task.input_text)
    errors = {
        "seq_loss": grad_check(cfg, src_args, tgt, loss="seq", epsilon=args.epsilon,
                               sample_size=args.sample_size, seed=args.seed),
        "class_loss": grad_check(cfg, src_frame, gold_class=corpus.ontology.frame_index(ex.frame),
                                 trigger=trigger_positions(src_frame, vocab), loss="class",
                                 epsilon=args.epsilon, sample_size=args.sample_size, seed=args.seed),
    }
    ok = all(e < args.tol for e in errors.values())
    for path, err in errors.items():
        print(f"{path:<12} max relative error {err:.3e}  {'ok' if err < args.tol else 'FAIL'} (tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="frameparse", description=__doc__, epilog=FORMATS, formatter_class=fmt)
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress lines")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-corpus", help="write a synthetic annotation file", epilog=FORMATS, formatter_class=fmt)
    p.add_argument("--spec", help="generator spec JSON (default: built-in 12-frame spec)")
    p.add_argument("--seed", type=int, default=1, help="sampling seed (default 1)")
    p.add_argument("--n-examples", type=int, default=None, help="override the generator's example count")
    p.add_argument("--out", required=True, help="annotation file to write; the generator settings are echoed to OUT.spec.json")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train a fullgen or multitask model", epilog=FORMATS, formatter_class=fmt)
    p.add_argument("--corpus", help="annotation file, split 80/10/10 at random")
    p.add_argument("--train-corpus", help="pre-split training file (instead of --corpus)")
    p.add_argument("--dev-corpus", help="pre-split dev file")
    p.add_argument("--split-seed", type=int, default=0, help="seed of the 80/10/10 split")
    p.add_argument("--save-splits", metavar="PREFIX", help="write PREFIX.{train,dev,test}.jsonl")
    p.add_argument("--mode", choices=MODES, required=True, help="one seq2seq task, or frame classifier plus argument decoder")
    p.add_argument("--out", required=True, help="checkpoint to write")
    p.add_argument("--history", help="history file (default OUT.history.jsonl)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict frames and roles for an annotation file",
                       epilog=FORMATS, formatter_class=fmt)
    p.add_argument("--checkpoint", required=True, help="checkpoint written by train")
    p.add_argument("--corpus", required=True, help="annotation file supplying sentences and triggers")
    p.add_argument("--mode", choices=MODES, help="refuse a checkpoint trained in another mode")
    p.add_argument("--gold-frames", action="store_true", help="condition roles on the gold frames")
    p.add_argument("--restrict-roles", action="store_true", help="drop roles the ontology does not list for the frame")
    p.add_argument("--out", required=True, help="prediction file to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold", epilog=FORMATS, formatter_class=fmt)
    p.add_argument("--pred", required=True, help="prediction file")
    p.add_argument("--gold", required=True, help="annotation file, aligned record by record")
    p.add_argument("--report", help="write the report as JSON here")
    p.add_argument("--no-frame-penalty", action="store_true",
                   help="score roles even when the predicted frame is wrong")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference check of both loss gradients",
                       epilog=FORMATS, formatter_class=fmt)
    p.add_argument("--tol", type=float, default=1e-4, help="largest accepted relative error")
    p.add_argument("--epsilon", type=float, default=1e-4, help="central-difference step")
    p.add_argument("--sample-size", type=int, default=5, help="entries checked per parameter tensor")
    p.add_argument("--seed", type=int, default=0, help="seed for the probe example and sampled entries")
    _add_config_flags(p, train=False)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"frameparse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"frameparse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CorpusError, CheckpointError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"frameparse: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

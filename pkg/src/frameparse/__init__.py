"""Frame-semantic parsing as text generation.

A small transformer encoder-decoder reads a sentence with a marked trigger and writes
out the evoked frame and its labelled argument spans, either as one linearized string
(``"fullgen"``) or as a frame classifier plus a frame-conditioned argument decoder
(``"multitask"``).
"""

from frameparse.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from frameparse.codec import TaskKind, Vocabulary, fullgen_encode, fullgen_parse, multitask_encode, vocab_build
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
from frameparse.gradcheck import grad_check
from frameparse.metrics import MatchReport, evaluate, exact_match, global_match, score, soft_match
from frameparse.model import FrameParserModel, ModelConfig, init_params
from frameparse.pipeline import FrameInterpretation, batch_predict, predict_fullgen, predict_multitask
from frameparse.synthetic import GeneratorSpec, default_generator_spec, generate_synthetic
from frameparse.training import NumericalError, TrainConfig, train

__version__ = "0.1.0"

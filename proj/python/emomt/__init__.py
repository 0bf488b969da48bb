"""Python bindings for the emomt library."""

import json as _json

from ._emomt import (
    BackendError,
    CoverageError,
    EmotionScores,
    EmotionTag,
    Error,
    RecordError,
    TransportError,
    UsageError,
    ValidationError,
    binarize,
    corpus_bleu,
    has_emotion_markup,
    load_corpus,
    parse_hypothesis,
    render,
    tokenize_13a,
)
from . import _emomt


def _dump(report):
    return report if isinstance(report, str) else _json.dumps(report)


def select_best(report):
    """Label of the best row: dev COMET, then dev BLEU, then first listed."""
    return _emomt._select_best(_dump(report))


def compute_deltas(report, baseline):
    """Report dict with per-row differences against the baseline row."""
    return _json.loads(_emomt._compute_deltas(_dump(report), baseline))


def render_table(report):
    return _emomt._render_table(_dump(report))


__all__ = [
    "BackendError", "CoverageError", "EmotionScores", "EmotionTag", "Error", "RecordError",
    "TransportError", "UsageError", "ValidationError", "binarize", "compute_deltas", "corpus_bleu",
    "has_emotion_markup", "load_corpus", "parse_hypothesis", "render", "render_table", "select_best",
    "tokenize_13a",
]

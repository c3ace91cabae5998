"""European vs Brazilian Portuguese variety identification.

Python bindings over the C++ core. Documents are dicts with the corpus
JSONL keys: id, text and optionally domain, label, source.
"""

from ._varid import (
    Model,
    VaridError,
    __version__,
    agreement,
    build_splits,
    clean,
    confusion_and_f1,
    delex_surface,
    delexicalize,
    fingerprint,
    fleiss_kappa,
    ingest_benchmark,
    ngrams,
    normalize_text,
    paired_analysis,
    select_best,
    silver_label,
    sweep,
    synthetic_corpus,
    tag,
    tokenize,
    undersample,
)

__all__ = [
    "Model",
    "VaridError",
    "__version__",
    "agreement",
    "build_splits",
    "clean",
    "confusion_and_f1",
    "delex_surface",
    "delexicalize",
    "fingerprint",
    "fleiss_kappa",
    "ingest_benchmark",
    "ngrams",
    "normalize_text",
    "paired_analysis",
    "select_best",
    "silver_label",
    "sweep",
    "synthetic_corpus",
    "tag",
    "tokenize",
    "undersample",
]

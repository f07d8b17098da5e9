"""Annotation and analysis tooling for code-switched bilingual corpora."""

from .corpus_model import CoreLangTag, Corpus, CorpusKind, DominanceClass, Gender, Sentence, SpeakerMeta, Token
from .ingest import TagMapping, filter_intrasentential, parse_corpus, read_corpus, serialize_corpus
from .metrics import corpus_stats
from .taxonomy import builtin_schema, canonicalize_label

__version__ = "0.1.0"

__all__ = [
    "CoreLangTag",
    "Corpus",
    "CorpusKind",
    "DominanceClass",
    "Gender",
    "Sentence",
    "SpeakerMeta",
    "TagMapping",
    "Token",
    "builtin_schema",
    "canonicalize_label",
    "corpus_stats",
    "filter_intrasentential",
    "parse_corpus",
    "read_corpus",
    "serialize_corpus",
]

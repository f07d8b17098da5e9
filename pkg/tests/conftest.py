from __future__ import annotations

import json
from itertools import count

import pytest

from cswitch.annotator import AnnotationRecord, Provenance
from cswitch.corpus_model import CoreLangTag, Corpus, CorpusKind, Gender, Sentence, SpeakerMeta, Token
from cswitch.taxonomy import CanonLabel, builtin_schema

_ids = count(1)

# surface forms per core tag, just to get plausible text
WORDS = {
    "spa": "casa",
    "eng": "house",
    "gn": "óga",
    "punc": ".",
    "other": "😀",
    "eng&spa": "ok",
    "gn&spa": "ndaje",
}


def tok(tag: str, text: str | None = None) -> Token:
    return Token(text or WORDS[tag], tag, CoreLangTag(tag))


def sent(tags, sent_id=None, gender=Gender.F, age=30, texts=None) -> Sentence:
    texts = texts or [None] * len(tags)
    return Sentence(
        sent_id if sent_id is not None else next(_ids),
        "file1",
        SpeakerMeta("SPK", age, gender, "conversation"),
        tuple(tok(t, x) for t, x in zip(tags, texts)),
    )


def corpus(kind, sentences) -> Corpus:
    return Corpus(CorpusKind.parse(kind), tuple(sentences))


def line(sent_id, tags, gender="F", age=30, **extra) -> bytes:
    obj = {
        "sent_id": sent_id,
        "filename": "f",
        "speaker": "S",
        "age": age,
        "gender": gender,
        "situation": "s",
        "tokens": [{"text": WORDS.get(t, t), "raw_tag": t} for t in tags],
    }
    obj.update(extra)
    return (json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8")


def rec(sent_id, kind, secondary=None, **labels) -> AnnotationRecord:
    """An annotation record with the given labels taken as already canonical."""
    schema = builtin_schema(kind)
    canon = {
        name: CanonLabel(schema.kind_of(name), label, unknown=label == schema.kind_of(name).sentinel)
        for name, label in labels.items()
    }
    sec = None
    if secondary is not None:
        sec_name = next(f.secondary for f in schema.fields if f.secondary)
        sec = CanonLabel(schema.kind_of(sec_name), secondary)
    return AnnotationRecord(sent_id, CorpusKind.parse(kind), canon, sec, Provenance("test", "k", "h"))


# --- acceptance summary -----------------------------------------------------

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL/SKIP line per acceptance criterion."""

    def record(name: str, passed: bool | str | None, detail: str = ""):
        if isinstance(passed, str):
            status = passed
        else:
            status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        _ACCEPTANCE.append((status, name, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{status:12}  {name}" + (f"  ({detail})" if detail else ""))

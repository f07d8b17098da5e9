"""Read and write the line-delimited corpus interchange format.

One sentence per line, UTF-8 JSON::

    {"sent_id": 916, "filename": "herring1", "speaker": "LIL", "age": 63,
     "gender": "F", "situation": "...", "tokens": [{"text": "ay", "raw_tag": "spa"}, ...]}

A ``lang_tag`` key may be present; it is ignored on read and recomputed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional

from .corpus_model import (
    CoreLangTag,
    Corpus,
    CorpusKind,
    Gender,
    Sentence,
    SpeakerMeta,
    Token,
    distinct_core_languages,
    is_content_token,
)
from .errors import DuplicateSentId, ParseError, UnmappedTag

REQUIRED_KEYS = ("sent_id", "filename", "speaker", "age", "gender", "situation", "tokens")
OPTIONAL_KEYS = ("lang_tag",)


@dataclass(frozen=True)
class TagMapping:
    entries: Mapping[str, CoreLangTag] = field(default_factory=dict)
    default: Optional[CoreLangTag] = None

    @classmethod
    def load(cls, path: str | Path) -> "TagMapping":
        """Load ``raw<TAB>core`` lines; a raw tag of ``*`` sets the default."""
        entries: dict[str, CoreLangTag] = {}
        default = None
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                raw, core = line.split("\t")
                tag = CoreLangTag(core.strip())
            except ValueError:
                raise ParseError(n, f"bad tag mapping line {line!r}") from None
            if raw.strip() == "*":
                default = tag
            else:
                entries[raw.strip()] = tag
        return cls(entries, default)


MIAMI_TAGS = TagMapping(
    {
        "spa": CoreLangTag.SPA,
        "eng": CoreLangTag.ENG,
        "eng&spa": CoreLangTag.ENG_SPA,
        "punc": CoreLangTag.PUNC,
    }
)

# GUA-SPA shared-task labels. Spanish variants (incl. the code-switch /
# unadapted-loan subtypes) and named entities collapse to spa.
GUASPA_TAGS = TagMapping(
    {
        "gn": CoreLangTag.GN,
        "es": CoreLangTag.SPA,
        "es-cc": CoreLangTag.SPA,
        "es-ul": CoreLangTag.SPA,
        "spa": CoreLangTag.SPA,
        "ne": CoreLangTag.SPA,
        "ne-per": CoreLangTag.SPA,
        "ne-loc": CoreLangTag.SPA,
        "ne-org": CoreLangTag.SPA,
        "ne-misc": CoreLangTag.SPA,
        "gn&spa": CoreLangTag.GN_SPA,
        "mix": CoreLangTag.GN_SPA,
        "mixed": CoreLangTag.GN_SPA,
        "foreign": CoreLangTag.OTHER,
        "other": CoreLangTag.OTHER,
        "unk": CoreLangTag.OTHER,
        "unknown": CoreLangTag.OTHER,
        "punct": CoreLangTag.OTHER,
        "punc": CoreLangTag.OTHER,
        "emoji": CoreLangTag.OTHER,
    }
)


def builtin_mapping(kind: CorpusKind) -> TagMapping:
    return MIAMI_TAGS if CorpusKind.parse(kind) is CorpusKind.MIAMI else GUASPA_TAGS


def merge_raw_tag(raw: str, m: TagMapping) -> CoreLangTag:
    if not raw:
        raise ValueError("raw tag must be non-empty")
    try:
        return m.entries[raw]
    except KeyError:
        if m.default is None:
            raise UnmappedTag(raw) from None
        return m.default


def _field(obj: dict, key: str, types, line: int, nullable: bool = False):
    value = obj[key]
    if value is None and nullable:
        return None
    # bool is an int subclass; never accept it as a number
    if isinstance(value, bool) or not isinstance(value, types):
        raise ParseError(line, f"field {key!r} has wrong type {type(value).__name__}")
    return value


def _parse_line(obj, kind: CorpusKind, m: TagMapping, line: int) -> Sentence:
    if not isinstance(obj, dict):
        raise ParseError(line, "record is not a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in obj]
    if missing:
        raise ParseError(line, f"missing field(s) {', '.join(missing)}")
    extra = sorted(set(obj) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if extra:
        raise ParseError(line, f"unexpected field(s) {', '.join(extra)}")

    sent_id = _field(obj, "sent_id", int, line)
    age = _field(obj, "age", int, line, nullable=True)
    if age is not None and age < 0:
        raise ParseError(line, "age must be non-negative")
    gender = _field(obj, "gender", str, line, nullable=True)
    if gender not in (None, "M", "F"):
        raise ParseError(line, f"gender must be 'M', 'F' or null, got {gender!r}")
    meta = SpeakerMeta(
        speaker=_field(obj, "speaker", str, line),
        age=age,
        gender=Gender(gender) if gender else Gender.UNKNOWN,
        situation=_field(obj, "situation", str, line),
    )

    raw_tokens = _field(obj, "tokens", list, line)
    if not raw_tokens:
        raise ParseError(line, "tokens must be non-empty")
    legal = set(kind.legal_tags)
    tokens = []
    for i, tok in enumerate(raw_tokens):
        if not isinstance(tok, dict) or set(tok) != {"text", "raw_tag"}:
            raise ParseError(line, f"token {i} must be an object with exactly text and raw_tag")
        text, raw = tok["text"], tok["raw_tag"]
        if not isinstance(text, str) or not text:
            raise ParseError(line, f"token {i} has empty or non-string text")
        if not isinstance(raw, str) or not raw:
            raise ParseError(line, f"token {i} has empty or non-string raw_tag")
        try:
            core = merge_raw_tag(raw, m)
        except UnmappedTag as exc:
            raise UnmappedTag(exc.raw, line) from None
        if core not in legal:
            raise ParseError(line, f"tag {core.value!r} is not legal in a {kind.value} corpus")
        tokens.append(Token(text, raw, core))

    if not any(is_content_token(t) for t in tokens):
        raise ParseError(line, "sentence has no content tokens")
    return Sentence(sent_id, _field(obj, "filename", str, line), meta, tuple(tokens))


def parse_corpus(
    stream: IO[bytes] | Iterable[bytes],
    kind: CorpusKind | str,
    m: TagMapping | None = None,
) -> Corpus:
    kind = CorpusKind.parse(kind)
    m = m or builtin_mapping(kind)
    sentences: list[Sentence] = []
    seen: dict[int, int] = {}
    for line_no, raw_line in enumerate(stream, 1):
        try:
            text = raw_line.decode("utf-8") if isinstance(raw_line, bytes) else raw_line
        except UnicodeDecodeError as exc:
            raise ParseError(line_no, f"invalid UTF-8: {exc.reason}") from None
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc.msg}") from None
        sent = _parse_line(obj, kind, m, line_no)
        if sent.sent_id in seen:
            raise DuplicateSentId(line_no, sent.sent_id)
        seen[sent.sent_id] = line_no
        sentences.append(sent)
    return Corpus(kind, tuple(sentences))


def read_corpus(path: str | Path, kind: CorpusKind | str, m: TagMapping | None = None) -> Corpus:
    with open(path, "rb") as fh:
        return parse_corpus(fh, kind, m)


def sentence_record(s: Sentence) -> dict:
    return {
        "sent_id": s.sent_id,
        "filename": s.filename,
        "speaker": s.meta.speaker,
        "age": s.meta.age,
        "gender": None if s.meta.gender is Gender.UNKNOWN else s.meta.gender.value,
        "situation": s.meta.situation,
        "lang_tag": s.lang_tag,
        "tokens": [{"text": t.text, "raw_tag": t.raw_tag} for t in s.tokens],
    }


def serialize_corpus(c: Corpus) -> bytes:
    lines = [json.dumps(sentence_record(s), ensure_ascii=False) for s in c.sentences]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def filter_intrasentential(c: Corpus) -> Corpus:
    """Keep sentences with at least two distinct core languages."""
    kept = tuple(s for s in c.sentences if len(distinct_core_languages(s)) >= 2)
    return Corpus(c.kind, kept)

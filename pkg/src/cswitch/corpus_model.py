"""Core value types for code-switched corpora.

Everything here is immutable and free of I/O so it can be shared between
the parser, the statistics code and the annotation pipeline.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional


class CoreLangTag(str, enum.Enum):
    SPA = "spa"
    ENG = "eng"
    GN = "gn"
    PUNC = "punc"
    OTHER = "other"
    ENG_SPA = "eng&spa"
    GN_SPA = "gn&spa"

    @property
    def is_core_language(self) -> bool:
        return self in CORE_LANGUAGES

    @property
    def is_ambiguous(self) -> bool:
        return self in AMBIGUOUS

    @property
    def is_content(self) -> bool:
        return self not in NON_CONTENT


CORE_LANGUAGES = frozenset({CoreLangTag.SPA, CoreLangTag.ENG, CoreLangTag.GN})
AMBIGUOUS = frozenset({CoreLangTag.ENG_SPA, CoreLangTag.GN_SPA})
NON_CONTENT = frozenset({CoreLangTag.PUNC, CoreLangTag.OTHER})

# Fixed serialization order for lang_tag strings.
_LANG_ORDER = (CoreLangTag.SPA, CoreLangTag.ENG, CoreLangTag.GN)


class CorpusKind(str, enum.Enum):
    MIAMI = "miami"
    GUASPA = "guaspa"

    @classmethod
    def parse(cls, value: "str | CorpusKind") -> "CorpusKind":
        if isinstance(value, CorpusKind):
            return value
        key = value.strip().lower().replace("-", "").replace("_", "")
        aliases = {"miami": cls.MIAMI, "guaspa": cls.GUASPA, "spagua": cls.GUASPA}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown corpus kind: {value!r}") from None

    @property
    def legal_tags(self) -> tuple[CoreLangTag, ...]:
        """Tags legal for this kind, in Table-1 display order."""
        return LEGAL_TAGS[self]

    @property
    def partner_language(self) -> CoreLangTag:
        """The non-Spanish core language of the pair."""
        return CoreLangTag.ENG if self is CorpusKind.MIAMI else CoreLangTag.GN


LEGAL_TAGS = {
    CorpusKind.MIAMI: (CoreLangTag.SPA, CoreLangTag.ENG, CoreLangTag.PUNC, CoreLangTag.ENG_SPA),
    CorpusKind.GUASPA: (CoreLangTag.SPA, CoreLangTag.GN, CoreLangTag.OTHER, CoreLangTag.GN_SPA),
}


class Gender(str, enum.Enum):
    M = "M"
    F = "F"
    UNKNOWN = "Unknown"


class DominanceClass(str, enum.Enum):
    SPANISH_DOMINANT = "SpanishDominant"
    ENGLISH_DOMINANT = "EnglishDominant"
    GUARANI_DOMINANT = "GuaraniDominant"
    BALANCED = "Balanced"


@dataclass(frozen=True)
class Token:
    text: str
    raw_tag: str
    core: CoreLangTag

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")


@dataclass(frozen=True)
class SpeakerMeta:
    speaker: str
    age: Optional[int] = None
    gender: Gender = Gender.UNKNOWN
    situation: str = ""

    def __post_init__(self):
        if self.age is not None and self.age < 0:
            raise ValueError(f"age must be non-negative, got {self.age}")


@dataclass(frozen=True)
class Sentence:
    sent_id: int
    filename: str
    meta: SpeakerMeta
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.sent_id} has no tokens")
        # accept any iterable at construction time
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def lang_tag(self) -> str:
        return lang_tag_string(distinct_core_languages(self))

    @property
    def text(self) -> str:
        return detokenize(self.tokens)


@dataclass(frozen=True)
class Corpus:
    kind: CorpusKind
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        legal = set(self.kind.legal_tags)
        seen: set[int] = set()
        for s in self.sentences:
            if s.sent_id in seen:
                raise ValueError(f"duplicate sent_id {s.sent_id}")
            seen.add(s.sent_id)
            for t in s.tokens:
                if t.core not in legal:
                    raise ValueError(
                        f"sentence {s.sent_id}: tag {t.core.value!r} is not legal "
                        f"for a {self.kind.value} corpus"
                    )

    def __len__(self) -> int:
        return len(self.sentences)

    def by_id(self) -> dict[int, Sentence]:
        return {s.sent_id: s for s in self.sentences}

    @property
    def token_count(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)


def is_content_token(t: Token) -> bool:
    return t.core.is_content


def distinct_core_languages(s: Sentence) -> frozenset[CoreLangTag]:
    """Core languages (spa/eng/gn) present in ``s``; ambiguous and
    non-content tokens never contribute."""
    return frozenset(t.core for t in s.tokens if t.core in CORE_LANGUAGES)


def lang_tag_string(langs: Iterable[CoreLangTag]) -> str:
    present = set(langs)
    return "+".join(tag.value for tag in _LANG_ORDER if tag in present)


def detokenize(tokens: Iterable[Token]) -> str:
    """Join tokens with single spaces, gluing punctuation to the left."""
    out: list[str] = []
    for t in tokens:
        if out and t.core is not CoreLangTag.PUNC:
            out.append(" ")
        out.append(t.text)
    return "".join(out)

"""Corpus-level statistics: token proportions, switch density, dominance."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .corpus_model import (
    CORE_LANGUAGES,
    CoreLangTag,
    Corpus,
    CorpusKind,
    DominanceClass,
    Sentence,
)
from .errors import EmptyCorpus


def round_half_up(x: float, places: int = 1) -> Decimal:
    # str() first so 59.85 is not seen as 59.849999...
    return Decimal(str(x)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt(x: float, places: int = 1) -> str:
    return f"{round_half_up(x, places):.{places}f}"


def _require(c: Corpus) -> None:
    if not c.sentences:
        raise EmptyCorpus("corpus has no sentences")


def language_proportions(c: Corpus) -> dict[CoreLangTag, float]:
    _require(c)
    counts = Counter(t.core for s in c.sentences for t in s.tokens)
    total = sum(counts.values())
    return {tag: 100.0 * counts[tag] / total for tag in c.kind.legal_tags}


def avg_tokens_per_sentence(c: Corpus) -> float:
    _require(c)
    return c.token_count / len(c.sentences)


def switch_points(s: Sentence) -> int:
    langs = [t.core for t in s.tokens if t.core in CORE_LANGUAGES]
    return sum(1 for a, b in zip(langs, langs[1:]) if a is not b)


def avg_switch_density(c: Corpus) -> float:
    _require(c)
    return sum(switch_points(s) for s in c.sentences) / len(c.sentences)


def dominant_language(s: Sentence, kind: CorpusKind | None = None) -> DominanceClass:
    """Strict-majority language of ``s`` counting only spa/eng/gn tokens.

    Without ``kind`` the partner language is inferred from the tokens;
    a sentence with neither eng nor gn is compared against zero.
    """
    counts = Counter(t.core for t in s.tokens if t.core in CORE_LANGUAGES)
    if kind is not None:
        partner = CorpusKind.parse(kind).partner_language
    else:
        partner = CoreLangTag.GN if counts[CoreLangTag.GN] > counts[CoreLangTag.ENG] else CoreLangTag.ENG
    spa, other = counts[CoreLangTag.SPA], counts[partner]
    if spa > other:
        return DominanceClass.SPANISH_DOMINANT
    if other > spa:
        return (
            DominanceClass.ENGLISH_DOMINANT
            if partner is CoreLangTag.ENG
            else DominanceClass.GUARANI_DOMINANT
        )
    return DominanceClass.BALANCED


@dataclass(frozen=True)
class CorpusStats:
    kind: CorpusKind
    sentence_count: int
    token_count: int
    avg_tokens_per_sentence: float
    proportions: dict[CoreLangTag, float]
    avg_switch_density: float

    def to_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "sentence_count": self.sentence_count,
            "token_count": self.token_count,
            "avg_tokens_per_sentence": self.avg_tokens_per_sentence,
            "proportions": {tag.value: pct for tag, pct in self.proportions.items()},
            "avg_switch_density": self.avg_switch_density,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2) + "\n"

    def to_text(self) -> str:
        """Flat ``key = value`` block with display rounding."""
        k = round_half_up(self.token_count / 1000, 1)
        lines = [
            f"kind = {self.kind.value}",
            f"sentences = {self.sentence_count}",
            f"tokens = {self.token_count} ({k}k)",
            f"avg_tokens_per_sentence = {fmt(self.avg_tokens_per_sentence)}",
        ]
        for tag, pct in self.proportions.items():
            lines.append(f"proportion.{tag.value} = {fmt(pct)}")
        lines.append(f"avg_switch_density = {fmt(self.avg_switch_density, 2)}")
        return "\n".join(lines) + "\n"


def corpus_stats(c: Corpus) -> CorpusStats:
    _require(c)
    return CorpusStats(
        kind=c.kind,
        sentence_count=len(c.sentences),
        token_count=c.token_count,
        avg_tokens_per_sentence=avg_tokens_per_sentence(c),
        proportions=language_proportions(c),
        avg_switch_density=avg_switch_density(c),
    )

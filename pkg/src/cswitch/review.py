"""Human verification of sampled annotations.

Sampling is driven by SplitMix64 so a (records, n, seed) triple selects
the same sentences in any language:

* generator: SplitMix64, state initialised to ``seed mod 2**64``;
* bounded draw in ``[0, b)``: draw ``r`` until ``r >= 2**64 mod b``,
  return ``r mod b``;
* selection: sort candidates by sent_id, then for ``i = 0..n-1`` swap
  position ``i`` with ``i + draw(len - i)`` (partial Fisher-Yates) and take
  the first ``n``. Sheet rows are listed in ascending sent_id.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .annotator import AnnotationRecord
from .corpus_model import Corpus, CorpusKind
from .errors import DanglingSentId, IncompleteSheet, ParseError, SampleTooLarge
from .metrics import fmt

MASK64 = (1 << 64) - 1

REVIEW_FIELDS = {
    CorpusKind.MIAMI: ("topic", "function", "secondary_function"),
    CorpusKind.GUASPA: ("formality", "genre", "topic", "secondary_topic"),
}
COMBINED_FIELDS = {
    CorpusKind.MIAMI: ("topic", "function"),
    CorpusKind.GUASPA: ("formality", "genre", "topic", "secondary_topic"),
}


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) % bound
        while True:
            r = self.next()
            if r >= threshold:
                return r % bound


class Verdict(str, enum.Enum):
    CORRECT = "C"
    INCORRECT = "I"
    UNSET = ""


@dataclass(frozen=True)
class ReviewRow:
    sent_id: int
    text: str
    labels: Mapping[str, Optional[str]]
    verdicts: Mapping[str, Verdict] = field(default_factory=dict)

    def verdict(self, name: str) -> Verdict:
        return self.verdicts.get(name, Verdict.UNSET)


@dataclass(frozen=True)
class ReviewSheet:
    corpus_kind: CorpusKind
    rows: tuple[ReviewRow, ...]
    seed: int

    def __post_init__(self):
        ids = [r.sent_id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise ValueError("review sheet has duplicate sent_ids")

    @property
    def fields(self) -> tuple[str, ...]:
        return REVIEW_FIELDS[self.corpus_kind]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sent_id", "sentence", *self.fields, *(f"{f}_verdict" for f in self.fields)])
        for r in self.rows:
            w.writerow(
                [r.sent_id, r.text]
                + [r.labels.get(f) or "" for f in self.fields]
                + [r.verdict(f).value for f in self.fields]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: CorpusKind | str, seed: int = 0) -> "ReviewSheet":
        kind = CorpusKind.parse(kind)
        fields = REVIEW_FIELDS[kind]
        reader = csv.DictReader(io.StringIO(text))
        need = ["sent_id", "sentence", *fields, *(f"{f}_verdict" for f in fields)]
        missing = [c for c in need if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(1, f"review sheet missing column(s) {', '.join(missing)}")
        rows = []
        for n, rec in enumerate(reader, 2):
            verdicts = {}
            for f in fields:
                v = (rec[f"{f}_verdict"] or "").strip().upper()
                if v not in ("C", "I", ""):
                    raise ParseError(n, f"verdict for {f} must be C, I or blank, got {v!r}")
                verdicts[f] = Verdict(v)
            try:
                sent_id = int(rec["sent_id"])
            except ValueError:
                raise ParseError(n, f"bad sent_id {rec['sent_id']!r}") from None
            rows.append(
                ReviewRow(sent_id, rec["sentence"], {f: rec[f] or None for f in fields}, verdicts)
            )
        return cls(kind, tuple(rows), seed)


def sample_ids(ids: Sequence[int], n: int, seed: int) -> list[int]:
    pool = sorted(ids)
    if n > len(pool):
        raise SampleTooLarge(f"cannot sample {n} from {len(pool)} records")
    rng = SplitMix64(seed)
    for i in range(n):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:n])


def sample_for_review(
    records: Sequence[AnnotationRecord], corpus: Corpus, n: int, seed: int
) -> ReviewSheet:
    by_id = {r.sent_id: r for r in records}
    sentences = corpus.by_id()
    fields = REVIEW_FIELDS[corpus.kind]
    rows = []
    for sid in sample_ids(list(by_id), n, seed):
        if sid not in sentences:
            raise DanglingSentId(f"record sent_id {sid} not in corpus")
        rec = by_id[sid]
        rows.append(ReviewRow(sid, sentences[sid].text, {f: rec.label(f) for f in fields}))
    return ReviewSheet(corpus.kind, tuple(rows), seed)


@dataclass(frozen=True)
class Score:
    correct: int
    total: int

    @property
    def percent(self) -> float:
        return 100.0 * self.correct / self.total if self.total else 0.0

    def display(self) -> str:
        return fmt(self.percent, 2)


@dataclass(frozen=True)
class AccuracyReport:
    per_field: Mapping[str, Score]
    combined: Score
    combined_fields: tuple[str, ...]
    # secondary fields scored against every sheet row, not just labelled ones
    secondary_over_rows: Mapping[str, Score]

    def to_text(self) -> str:
        lines = []
        for name, s in self.per_field.items():
            lines.append(f"{name} = {s.display()}% ({s.correct}/{s.total})")
        for name, s in self.secondary_over_rows.items():
            lines.append(f"{name}.over_all_rows = {s.display()}% ({s.correct}/{s.total})")
        c = self.combined
        lines.append(f"combined[{'+'.join(self.combined_fields)}] = {c.display()}% ({c.correct}/{c.total})")
        return "\n".join(lines) + "\n"


def score_review(sheet: ReviewSheet) -> AccuracyReport:
    fields = sheet.fields
    unset = []
    for r in sheet.rows:
        for f in fields:
            scored = not f.startswith("secondary_") or r.labels.get(f)
            if scored and r.verdict(f) is Verdict.UNSET:
                unset.append(r.sent_id)
                break
    if unset:
        raise IncompleteSheet(sorted(unset))

    per_field = {}
    over_rows = {}
    for f in fields:
        if f.startswith("secondary_"):
            rows = [r for r in sheet.rows if r.labels.get(f)]
        else:
            rows = list(sheet.rows)
        correct = sum(1 for r in rows if r.verdict(f) is Verdict.CORRECT)
        per_field[f] = Score(correct, len(rows))
        if f.startswith("secondary_"):
            over_rows[f] = Score(correct, len(sheet.rows))

    combined_fields = COMBINED_FIELDS[sheet.corpus_kind]
    combined = Score(
        sum(per_field[f].correct for f in combined_fields),
        sum(per_field[f].total for f in combined_fields),
    )
    return AccuracyReport(per_field, combined, combined_fields, over_rows)

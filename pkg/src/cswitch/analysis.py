"""Cross-tabulation of annotation records against metadata axes."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .annotator import AnnotationRecord
from .corpus_model import Corpus, CorpusKind, DominanceClass, Gender
from .errors import DanglingSentId, UnknownAxis
from .metrics import dominant_language, fmt
from .taxonomy import AnnotationSchema, builtin_schema

COLUMN_AXES = ("gender", "formality", "dominance")

GENDER_LABELS = {Gender.M: "Men", Gender.F: "Women"}

DOMINANCE_COLUMNS = {
    CorpusKind.MIAMI: (DominanceClass.SPANISH_DOMINANT, DominanceClass.ENGLISH_DOMINANT),
    CorpusKind.GUASPA: (DominanceClass.GUARANI_DOMINANT, DominanceClass.SPANISH_DOMINANT),
}


@dataclass(frozen=True)
class CountTable:
    row_axis: str
    row_labels: tuple[str, ...]
    col_axis: str
    col_labels: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]
    excluded: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        object.__setattr__(self, "cells", tuple(tuple(int(v) for v in row) for row in self.cells))
        object.__setattr__(self, "excluded", tuple((str(k), int(v)) for k, v in self.excluded))
        if len(self.cells) != len(self.row_labels):
            raise ValueError("cells/row_labels length mismatch")
        for row in self.cells:
            if len(row) != len(self.col_labels):
                raise ValueError("cell row has wrong width")
            if any(v < 0 for v in row):
                raise ValueError("counts must be non-negative")

    @property
    def col_totals(self) -> tuple[int, ...]:
        return tuple(sum(row[j] for row in self.cells) for j in range(len(self.col_labels)))

    @property
    def row_totals(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.cells)

    @property
    def grand_total(self) -> int:
        return sum(self.row_totals)

    def row(self, label: str) -> tuple[int, ...]:
        return self.cells[self.row_labels.index(label)]

    def digest(self) -> str:
        payload = json.dumps(
            [self.row_axis, self.row_labels, self.col_axis, self.col_labels, self.cells, self.excluded],
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PercentTable:
    row_axis: str
    row_labels: tuple[str, ...]
    col_axis: str
    col_labels: tuple[str, ...]
    cells: tuple[tuple[float, ...], ...]
    col_totals: tuple[int, ...]
    row_totals: tuple[int, ...]
    zero_columns: tuple[bool, ...]
    excluded: tuple[tuple[str, int], ...]
    source_hash: str

    def row(self, label: str) -> tuple[float, ...]:
        return self.cells[self.row_labels.index(label)]


@dataclass(frozen=True)
class AggregationPolicy:
    mode: str
    value: int
    others_label: str = "Others"

    def __post_init__(self):
        if self.mode == "top_n" and self.value < 1:
            raise ValueError("TopN needs n >= 1")
        if self.mode == "min_total" and self.value < 0:
            raise ValueError("MinTotal needs t >= 0")
        if self.mode not in ("top_n", "min_total"):
            raise ValueError(f"unknown aggregation mode {self.mode!r}")

    @classmethod
    def top_n(cls, n: int, others_label: str = "Others") -> "AggregationPolicy":
        return cls("top_n", n, others_label)

    @classmethod
    def min_total(cls, t: int, others_label: str = "Others") -> "AggregationPolicy":
        return cls("min_total", t, others_label)


# --- crosstab ---------------------------------------------------------------

def _column_value(axis: str, rec: AnnotationRecord, sent, kind: CorpusKind) -> str:
    """Column label for one record, or ``"!<bucket>"`` when excluded."""
    if axis == "gender":
        g = sent.meta.gender
        return GENDER_LABELS[g] if g in GENDER_LABELS else "!" + Gender.UNKNOWN.value
    if axis == "dominance":
        d = dominant_language(sent, kind)
        return d.value if d in DOMINANCE_COLUMNS[kind] else "!" + d.value
    # an annotation field used as a column (formality)
    label = rec.label(axis)
    if label is None:
        return "!missing"
    return label


def _column_labels(axis: str, kind: CorpusKind, schema: AnnotationSchema) -> tuple[str, ...]:
    if axis == "gender":
        return tuple(GENDER_LABELS.values())
    if axis == "dominance":
        return tuple(d.value for d in DOMINANCE_COLUMNS[kind])
    return schema.field(axis).labels


def _check_axis(name: str, schema: AnnotationSchema, column: bool) -> None:
    if column and name in ("gender", "dominance"):
        return
    if name not in schema.field_names:
        raise UnknownAxis(f"no axis named {name!r} for a {schema.corpus_kind.value} corpus")


def crosstab(
    records: Iterable[AnnotationRecord],
    corpus: Corpus,
    row_field: str,
    col_field: str,
    schema: Optional[AnnotationSchema] = None,
) -> CountTable:
    """Count sentences per (row label, column label).

    Rows come out by descending total, ties in schema order, with the
    UNKNOWN sentinel after all schema labels. Records whose column value
    is excluded (gender Unknown, dominance Balanced, unknown formality)
    are counted in ``excluded`` instead.
    """
    schema = schema or builtin_schema(corpus.kind)
    _check_axis(row_field, schema, column=False)
    _check_axis(col_field, schema, column=True)
    sentences = corpus.by_id()
    row_field_def = schema.field(row_field)
    base_rows = list(row_field_def.labels)
    cols = _column_labels(col_field, corpus.kind, schema)
    col_index = {c: j for j, c in enumerate(cols)}

    counts: Counter = Counter()
    excluded: Counter = Counter()
    extra_rows: list[str] = []
    for rec in records:
        sent = sentences.get(rec.sent_id)
        if sent is None:
            raise DanglingSentId(f"record sent_id {rec.sent_id} not in corpus")
        col = _column_value(col_field, rec, sent, corpus.kind)
        if col.startswith("!") or col not in col_index:
            excluded[col.lstrip("!")] += 1
            continue
        row = rec.label(row_field)
        if row is None:
            excluded["no " + row_field] += 1
            continue
        if row not in base_rows and row not in extra_rows:
            extra_rows.append(row)
        counts[row, col] += 1

    order = {label: i for i, label in enumerate(base_rows + sorted(extra_rows))}
    totals = {r: sum(counts[r, c] for c in cols) for r in order}
    rows = sorted(order, key=lambda r: (-totals[r], order[r]))
    # sentinels and off-schema labels only appear when observed
    rows = [r for r in rows if r in base_rows or totals[r] > 0]
    cells = [[counts[r, c] for c in cols] for r in rows]
    return CountTable(
        row_axis=row_field,
        row_labels=tuple(rows),
        col_axis=col_field,
        col_labels=cols,
        cells=cells,
        excluded=tuple(sorted(excluded.items())),
    )


def normalize_within_columns(t: CountTable) -> PercentTable:
    totals = t.col_totals
    cells = tuple(
        tuple(100.0 * v / totals[j] if totals[j] else 0.0 for j, v in enumerate(row)) for row in t.cells
    )
    return PercentTable(
        row_axis=t.row_axis,
        row_labels=t.row_labels,
        col_axis=t.col_axis,
        col_labels=t.col_labels,
        cells=cells,
        col_totals=totals,
        row_totals=t.row_totals,
        zero_columns=tuple(total == 0 for total in totals),
        excluded=t.excluded,
        source_hash=t.digest(),
    )


def _is_sorted(t: CountTable) -> bool:
    totals = t.row_totals
    return all(a >= b for a, b in zip(totals, totals[1:]))


def aggregate_others(t: CountTable, p: AggregationPolicy) -> CountTable:
    if not _is_sorted(t):
        raise ValueError("aggregate_others needs rows sorted by descending total")
    totals = t.row_totals
    if p.mode == "top_n":
        merge = [i >= p.value for i in range(len(t.row_labels))]
    else:
        merge = [total <= p.value for total in totals]
    if not any(merge):
        return t
    keep = [i for i, m in enumerate(merge) if not m]
    others = [0] * len(t.col_labels)
    for i, m in enumerate(merge):
        if m:
            others = [a + b for a, b in zip(others, t.cells[i])]
    return CountTable(
        row_axis=t.row_axis,
        row_labels=tuple(t.row_labels[i] for i in keep) + (p.others_label,),
        col_axis=t.col_axis,
        col_labels=t.col_labels,
        cells=tuple(t.cells[i] for i in keep) + (tuple(others),),
        excluded=t.excluded,
    )


def truncate_rows(t: CountTable, n: int) -> CountTable:
    """Keep the first ``n`` rows; dropped counts move to ``excluded``."""
    if len(t.row_labels) <= n:
        return t
    dropped = sum(t.row_totals[n:])
    return CountTable(
        row_axis=t.row_axis,
        row_labels=t.row_labels[:n],
        col_axis=t.col_axis,
        col_labels=t.col_labels,
        cells=t.cells[:n],
        excluded=t.excluded + ((f"trimmed {t.row_axis} rows", dropped),),
    )


# --- rendering --------------------------------------------------------------

def _grid(t: CountTable | PercentTable) -> tuple[list[str], list[list[str]], list[str]]:
    """Header, body rows and the totals row as display strings."""
    if isinstance(t, PercentTable):
        header = [t.row_axis] + [
            f"{c} (%)" + (" (n=0)" if zero else "") for c, zero in zip(t.col_labels, t.zero_columns)
        ] + ["Total (n)"]
        body = [
            [label] + [fmt(v) for v in row] + [str(n)]
            for label, row, n in zip(t.row_labels, t.cells, t.row_totals)
        ]
        totals = list(t.col_totals)
    else:
        header = [t.row_axis] + list(t.col_labels) + ["Total"]
        body = [
            [label] + [str(v) for v in row] + [str(n)]
            for label, row, n in zip(t.row_labels, t.cells, t.row_totals)
        ]
        totals = list(t.col_totals)
    total_row = ["Total"] + [str(v) for v in totals] + [str(sum(totals))]
    return header, body, total_row


def render_table(t: CountTable | PercentTable, format: str = "csv") -> str:
    header, body, total_row = _grid(t)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)
        w.writerow(total_row)
        for label, n in t.excluded:
            w.writerow([f"Excluded: {label}"] + [""] * (len(header) - 2) + [str(n)])
        return buf.getvalue()
    if format in ("md", "markdown"):
        rows = [header] + body + [total_row]
        widths = [max(len(r[j]) for r in rows) for j in range(len(header))]

        def line(cells):
            parts = [cells[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
            return "| " + " | ".join(parts) + " |"

        rule = "|" + "|".join(
            ["-" * (widths[0] + 2)] + ["-" * (w + 1) + ":" for w in widths[1:]]
        ) + "|"
        out = [line(header), rule] + [line(r) for r in body] + [line(total_row)]
        if t.excluded:
            out.append("")
            out.append("Excluded: " + ", ".join(f"{label}={n}" for label, n in t.excluded))
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown table format {format!r}")


def table_stem(t: CountTable | PercentTable) -> str:
    return f"{t.row_axis}_by_{t.col_axis}"


def standard_tables(
    kind: CorpusKind,
    genre_top_n: int = 8,
    topic_min_total: int = 15,
) -> list[tuple[str, str, Optional[AggregationPolicy]]]:
    """(row axis, column axis, aggregation) for the standard report tables."""
    if kind is CorpusKind.MIAMI:
        return [("topic", "gender", None), ("function", "gender", None)]
    return [
        ("genre", "formality", AggregationPolicy.top_n(genre_top_n)),
        ("topic", "formality", AggregationPolicy.min_total(topic_min_total)),
    ]


def standard_charts(
    kind: CorpusKind, genre_top: int = 10, topic_top: int = 15
) -> list[tuple[str, str, Optional[int]]]:
    """(row axis, column axis, row cap) for the dominance figures."""
    if kind is CorpusKind.MIAMI:
        return [("topic", "dominance", None), ("function", "dominance", None)]
    return [("genre", "dominance", genre_top), ("topic", "dominance", topic_top)]


def build_tables(
    records: Sequence[AnnotationRecord],
    corpus: Corpus,
    specs: Sequence[tuple[str, str, Optional[AggregationPolicy]]],
    schema: Optional[AnnotationSchema] = None,
) -> list[tuple[CountTable, PercentTable]]:
    out = []
    for row, col, policy in specs:
        counts = crosstab(records, corpus, row, col, schema)
        if policy is not None:
            counts = aggregate_others(counts, policy)
        out.append((counts, normalize_within_columns(counts)))
    return out

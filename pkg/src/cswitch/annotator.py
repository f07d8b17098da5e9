"""Prompt construction, strict response parsing and batch annotation."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence

from .corpus_model import CorpusKind, Gender, Sentence
from .errors import (
    GatewayUnavailable,
    MissingField,
    MissingSentId,
    NonStrictJson,
    ReplayMiss,
    ResponseError,
    SchemaMismatch,
    SentIdMismatch,
    TransportError,
    UnexpectedKey,
)
from .taxonomy import AnnotationSchema, CanonLabel, validate_record

log = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-4.1-2025-04-14"

RESPONSE_KEYS = {
    CorpusKind.MIAMI: ("sent_id", "topic", "function", "secondary_function"),
    CorpusKind.GUASPA: ("sent_id", "formality", "genre", "topic", "secondary_topic"),
}

INPUT_FIELDS = ("sent_id", "filename", "speaker", "age", "gender", "situation", "lang_tag", "sentence")


@dataclass(frozen=True)
class ModelParams:
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 200


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    params: ModelParams = ModelParams()

    @property
    def cache_key(self) -> str:
        payload = json.dumps(
            [
                self.system_text,
                self.user_text,
                self.params.model_name,
                float(self.params.temperature),
                int(self.params.max_tokens),
            ],
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Exemplar:
    input: Mapping[str, object]
    output: Mapping[str, object]
    synthetic: bool = False


@dataclass(frozen=True)
class GatewayPolicy:
    max_retries: int = 2
    batch_size: int = 50
    max_concurrency: int = 4

    def __post_init__(self):
        if not 50 <= self.batch_size <= 100:
            raise ValueError(f"batch_size must be within [50, 100], got {self.batch_size}")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class Gateway(Protocol):
    gateway_id: str

    def complete(self, bundle: PromptBundle) -> str: ...


# --- exemplars --------------------------------------------------------------

MIAMI_EXEMPLARS = (
    Exemplar(
        {"sent_id": 916, "age": 63, "gender": "F", "lang_tag": "spa+eng",
         "sentence": "ay ay yo vi los kneepads."},
        {"sent_id": 916, "topic": "Casual_EverydayTalk", "function": "TechnicalTermInsertion"},
    ),
    Exemplar(
        {"sent_id": 1, "age": 40, "gender": "M", "lang_tag": "spa+eng",
         "sentence": "y entonces she told me que no podía venir."},
        {"sent_id": 1, "topic": "Narratives_Quotations", "function": "Narrative",
         "secondary_function": "Quotation"},
        synthetic=True,
    ),
)

GUASPA_EXEMPLARS = (
    Exemplar(
        {"sent_id": 1, "lang_tag": "spa+gn",
         "sentence": "Ministerio de Salud ohechauka pe vacuna ñemoĩ ko arapokõindy."},
        {"sent_id": 1, "formality": "Formal", "genre": "News", "topic": "Health_COVID"},
        synthetic=True,
    ),
)


def default_exemplars(kind: CorpusKind | str) -> tuple[Exemplar, ...]:
    return MIAMI_EXEMPLARS if CorpusKind.parse(kind) is CorpusKind.MIAMI else GUASPA_EXEMPLARS


def load_exemplars(path: str | Path) -> tuple[Exemplar, ...]:
    """One ``{"input": {...}, "output": {...}, "synthetic": bool}`` per line."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            out.append(Exemplar(obj["input"], obj["output"], bool(obj.get("synthetic", False))))
    return tuple(out)


# --- prompts ----------------------------------------------------------------

_PAIR_NAME = {CorpusKind.MIAMI: "Spanish-English", CorpusKind.GUASPA: "Spanish-Guaraní"}


def _system_text(schema: AnnotationSchema) -> str:
    if schema.corpus_kind is CorpusKind.MIAMI:
        task = (
            "assign exactly one primary topic and one primary function,\n"
            "and optionally a secondary_function if clearly present."
        )
    else:
        task = (
            "assign exactly one formality, one genre and one primary topic,\n"
            "and optionally a secondary_topic if clearly present."
        )
    return (
        f"You are a careful {_PAIR_NAME[schema.corpus_kind]} discourse annotator.\n"
        f"Given a sentence and short metadata, {task}\n"
        "Be conservative: choose the label that best captures the discourse-level purpose of the sentence.\n"
        "Return only strict JSON (a single JSON object), no extra text or explanations."
    )


_FIELD_HINTS = {
    "topic": "1 primary domain label",
    "function": "1 primary discourse/pragmatic label",
    "formality": "1 register label",
    "genre": "1 genre label",
    "secondary_function": "optional, only if an additional pragmatic role is evident",
    "secondary_topic": "optional, only if a second topic is clearly present",
}


def _render_value(v) -> str:
    if v is None or v is Gender.UNKNOWN:
        return "unknown"
    if isinstance(v, Gender):
        return v.value
    return str(v)


def sentence_row(s: Sentence) -> dict:
    return {
        "sent_id": s.sent_id,
        "filename": s.filename,
        "speaker": s.meta.speaker,
        "age": s.meta.age,
        "gender": s.meta.gender,
        "situation": s.meta.situation,
        "lang_tag": s.lang_tag,
        "sentence": s.text,
    }


def _render_row(row: Mapping[str, object]) -> list[str]:
    return [f"{k}: {_render_value(row[k])}" for k in INPUT_FIELDS if k in row]


def build_prompt(
    s: Sentence,
    schema: AnnotationSchema,
    exemplars: Sequence[Exemplar] = (),
    params: ModelParams = ModelParams(),
) -> PromptBundle:
    legal = set(schema.corpus_kind.legal_tags)
    bad = sorted({t.core.value for t in s.tokens if t.core not in legal})
    if bad:
        raise SchemaMismatch(
            f"sentence {s.sent_id} carries tag(s) {', '.join(bad)} not legal "
            f"for a {schema.corpus_kind.value} schema"
        )

    lines = [
        f"Input fields: {', '.join(INPUT_FIELDS)}.",
        "Read the sentence and metadata carefully and select the most fitting labels:",
    ]
    lines += [f"- {name}: {_FIELD_HINTS[name]}" for name in schema.field_names]
    lines.append("Use exact category strings from the provided instruction lists.")

    for f in schema.fields:
        lines.append("")
        lines.append(f"## {f.name} labels")
        lines += [f"- {label}: {f.notes.get(label, '')}".rstrip() for label in f.labels]

    if exemplars:
        lines.append("")
        lines.append("## Examples")
        for ex in exemplars:
            lines.append("Input:")
            lines += _render_row(ex.input)
            lines.append("Output:")
            lines.append(json.dumps(dict(ex.output), ensure_ascii=False))

    lines.append("")
    lines.append("## Target")
    lines += _render_row(sentence_row(s))
    return PromptBundle(_system_text(schema), "\n".join(lines) + "\n", params)


# --- responses --------------------------------------------------------------

@dataclass(frozen=True)
class RawAnnotation:
    sent_id: int
    fields: Mapping[str, Optional[str]]
    response_hash: str


def _no_duplicates(pairs):
    obj = {}
    for k, v in pairs:
        if k in obj:
            raise NonStrictJson(f"duplicate key {k!r}")
        obj[k] = v
    return obj


def parse_response(text: str, kind: CorpusKind | str) -> RawAnnotation:
    kind = CorpusKind.parse(kind)
    body = text.strip()
    if not body.startswith("{"):
        raise NonStrictJson("response does not start with a JSON object")
    decoder = json.JSONDecoder(object_pairs_hook=_no_duplicates)
    try:
        obj, end = decoder.raw_decode(body)
    except json.JSONDecodeError as exc:
        raise NonStrictJson(f"invalid JSON: {exc.msg}") from None
    if end != len(body):
        raise NonStrictJson("extra text after the JSON object")

    allowed = RESPONSE_KEYS[kind]
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise UnexpectedKey(f"unexpected key(s): {', '.join(extra)}")
    if "sent_id" not in obj:
        raise MissingSentId("response has no sent_id")
    sent_id = obj["sent_id"]
    if isinstance(sent_id, bool) or not isinstance(sent_id, int):
        raise MissingSentId(f"sent_id must be an integer, got {sent_id!r}")
    fields = {}
    for key in allowed[1:]:
        if key in obj:
            value = obj[key]
            if value is not None and not isinstance(value, str):
                raise NonStrictJson(f"field {key!r} must be a string")
            fields[key] = value
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return RawAnnotation(sent_id, fields, digest)


# --- records ----------------------------------------------------------------

@dataclass(frozen=True)
class Provenance:
    gateway_id: str
    cache_key: str
    response_hash: str
    fuzz_corrections: int = 0


@dataclass(frozen=True)
class AnnotationRecord:
    sent_id: int
    corpus_kind: CorpusKind
    labels: Mapping[str, CanonLabel]
    secondary: Optional[CanonLabel]
    provenance: Provenance

    def label(self, name: str) -> Optional[str]:
        if name in self.labels:
            return self.labels[name].label
        if self.secondary is not None and name.startswith("secondary_"):
            return self.secondary.label
        return None

    def to_record(self, schema: AnnotationSchema) -> dict:
        secondary_name = next((f.secondary for f in schema.fields if f.secondary), None)
        return {
            "sent_id": self.sent_id,
            "corpus_kind": self.corpus_kind.value,
            "labels": {f.name: self.labels[f.name].label for f in schema.fields if f.name in self.labels},
            "secondary": {secondary_name: self.secondary.label if self.secondary else None},
            "provenance": {
                "gateway_id": self.provenance.gateway_id,
                "cache_key": self.provenance.cache_key,
                "response_hash": self.provenance.response_hash,
                "fuzz_corrections": self.provenance.fuzz_corrections,
            },
        }

    @classmethod
    def from_record(cls, obj: Mapping, schema: AnnotationSchema) -> "AnnotationRecord":
        labels = {}
        for name, label in obj["labels"].items():
            fk = schema.kind_of(name)
            labels[name] = CanonLabel(fk, label, unknown=label == fk.sentinel)
        secondary = None
        for name, label in (obj.get("secondary") or {}).items():
            if label is not None:
                secondary = CanonLabel(schema.kind_of(name), label)
        p = obj["provenance"]
        return cls(
            obj["sent_id"],
            CorpusKind.parse(obj["corpus_kind"]),
            labels,
            secondary,
            Provenance(p["gateway_id"], p["cache_key"], p["response_hash"], p.get("fuzz_corrections", 0)),
        )


def dump_records(records: Iterable[AnnotationRecord], schema: AnnotationSchema) -> str:
    return "".join(json.dumps(r.to_record(schema), ensure_ascii=False) + "\n" for r in records)


def load_records(path: str | Path, schema: AnnotationSchema) -> list[AnnotationRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(AnnotationRecord.from_record(json.loads(line), schema))
    return out


def to_record(raw: RawAnnotation, schema: AnnotationSchema, bundle: PromptBundle, gateway_id: str) -> AnnotationRecord:
    report = validate_record(raw.fields, schema)
    if not report.ok:
        raise MissingField(f"missing required field(s): {', '.join(report.missing_required)}")
    return AnnotationRecord(
        sent_id=raw.sent_id,
        corpus_kind=schema.corpus_kind,
        labels=report.labels(),
        secondary=report.secondary(),
        provenance=Provenance(gateway_id, bundle.cache_key, raw.response_hash, report.corrections),
    )


# --- batch driver -----------------------------------------------------------

@dataclass(frozen=True)
class Failure:
    sent_id: int
    error: str
    message: str
    attempts: int

    def to_record(self) -> dict:
        return {"sent_id": self.sent_id, "error": self.error, "message": self.message, "attempts": self.attempts}


@dataclass
class BatchResult:
    records: list[AnnotationRecord] = field(default_factory=list)
    failures: list[Failure] = field(default_factory=list)


def annotate_one(
    s: Sentence,
    gateway: Gateway,
    schema: AnnotationSchema,
    policy: GatewayPolicy,
    exemplars: Sequence[Exemplar] = (),
    params: ModelParams = ModelParams(),
) -> AnnotationRecord | Failure:
    bundle = build_prompt(s, schema, exemplars, params)
    attempts = 0
    last: Exception | None = None
    while attempts <= policy.max_retries:
        attempts += 1
        try:
            text = gateway.complete(bundle)
        except ReplayMiss as exc:
            # a replay miss is deterministic; retrying cannot help
            return Failure(s.sent_id, type(exc).__name__, str(exc), attempts)
        except TransportError as exc:
            last = exc
            log.warning("sent_id %s: transport error (attempt %d): %s", s.sent_id, attempts, exc)
            continue
        try:
            raw = parse_response(text, schema.corpus_kind)
            if raw.sent_id != s.sent_id:
                raise SentIdMismatch(f"response sent_id {raw.sent_id} != {s.sent_id}")
            return to_record(raw, schema, bundle, gateway.gateway_id)
        except ResponseError as exc:
            last = exc
            log.info("sent_id %s: rejected response (attempt %d): %s", s.sent_id, attempts, exc)
    if isinstance(last, TransportError):
        raise GatewayUnavailable(f"gateway failed {attempts} times for sent_id {s.sent_id}: {last}")
    assert last is not None
    return Failure(s.sent_id, type(last).__name__, str(last), attempts)


def annotate_batch(
    rows: Sequence[Sentence],
    gateway: Gateway,
    schema: AnnotationSchema,
    policy: GatewayPolicy = GatewayPolicy(),
    exemplars: Sequence[Exemplar] | None = None,
    params: ModelParams = ModelParams(),
    checkpoint: Optional[Callable[[BatchResult], None]] = None,
) -> BatchResult:
    """Annotate ``rows`` one request per sentence.

    Work proceeds in chunks of ``policy.batch_size``; after each chunk the
    new records and failures (sorted by sent_id) are handed to
    ``checkpoint``. On ``GatewayUnavailable`` whatever finished in the
    current chunk is checkpointed before the error propagates, with the
    accumulated result attached as ``exc.partial``.
    """
    if not rows:
        raise ValueError("rows must be non-empty")
    if exemplars is None:
        exemplars = default_exemplars(schema.corpus_kind)
    ordered = sorted(rows, key=lambda s: s.sent_id)
    result = BatchResult()

    def run_one(s):
        try:
            return annotate_one(s, gateway, schema, policy, exemplars, params)
        except GatewayUnavailable as exc:
            return exc

    with ThreadPoolExecutor(max_workers=policy.max_concurrency) as pool:
        for start in range(0, len(ordered), policy.batch_size):
            chunk = ordered[start:start + policy.batch_size]
            outcomes = list(pool.map(run_one, chunk))
            part = BatchResult(
                [o for o in outcomes if isinstance(o, AnnotationRecord)],
                [o for o in outcomes if isinstance(o, Failure)],
            )
            result.records += part.records
            result.failures += part.failures
            if checkpoint is not None and (part.records or part.failures):
                checkpoint(part)
            fatal = next((o for o in outcomes if isinstance(o, GatewayUnavailable)), None)
            if fatal is not None:
                fatal.partial = result
                raise fatal
    return result

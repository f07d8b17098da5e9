"""Annotation schemas and label canonicalization.

Raw labels emitted by the model are mapped onto a schema in three steps:
exact match, then case/separator-insensitive match, then nearest label
within edit distance 2. Anything else becomes the ``UNKNOWN_<FIELD>``
sentinel.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .corpus_model import CorpusKind

MAX_EDIT_DISTANCE = 2


class FieldKind(str, enum.Enum):
    MIAMI_TOPIC = "MiamiTopic"
    MIAMI_FUNCTION = "MiamiFunction"
    FORMALITY = "Formality"
    GENRE = "Genre"
    GUA_TOPIC = "GuaTopic"

    @property
    def sentinel(self) -> str:
        return "UNKNOWN_" + _SENTINEL_SUFFIX[self]


_SENTINEL_SUFFIX = {
    FieldKind.MIAMI_TOPIC: "TOPIC",
    FieldKind.MIAMI_FUNCTION: "FUNCTION",
    FieldKind.FORMALITY: "FORMALITY",
    FieldKind.GENRE: "GENRE",
    FieldKind.GUA_TOPIC: "TOPIC",
}


@dataclass(frozen=True)
class SchemaField:
    kind: FieldKind
    name: str
    required: bool
    labels: tuple[str, ...]
    notes: Mapping[str, str] = field(default_factory=dict, compare=False)
    secondary: Optional[str] = None

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in field {self.name}")


@dataclass(frozen=True)
class AnnotationSchema:
    corpus_kind: CorpusKind
    fields: tuple[SchemaField, ...]

    def field(self, key: "str | FieldKind") -> SchemaField:
        for f in self.fields:
            if f.kind == key or f.name == key or f.secondary == key:
                return f
        raise KeyError(key)

    @property
    def field_names(self) -> tuple[str, ...]:
        """Primary names followed by secondary names, in schema order."""
        names = [f.name for f in self.fields]
        names += [f.secondary for f in self.fields if f.secondary]
        return tuple(names)

    def kind_of(self, name: str) -> FieldKind:
        return self.field(name).kind

    def to_text(self) -> str:
        out = [f"kind {self.corpus_kind.value}"]
        for f in self.fields:
            req = "required" if f.required else "optional"
            sec = f" secondary={f.secondary}" if f.secondary else ""
            out.append("")
            out.append(f"field {f.kind.value} {f.name} {req}{sec}")
            out.extend(f"{label}\t{f.notes.get(label, '')}" for label in f.labels)
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AnnotationSchema":
        kind = None
        fields: list[SchemaField] = []
        cur: Optional[dict] = None

        def flush():
            if cur is not None:
                fields.append(SchemaField(**cur))

        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            if line.startswith("kind "):
                kind = CorpusKind.parse(line.split(None, 1)[1])
            elif line.startswith("field "):
                flush()
                parts = line.split()
                if len(parts) < 4:
                    raise ValueError(f"schema line {n}: malformed field header")
                secondary = None
                for extra in parts[4:]:
                    if extra.startswith("secondary="):
                        secondary = extra.split("=", 1)[1]
                cur = {
                    "kind": FieldKind(parts[1]),
                    "name": parts[2],
                    "required": parts[3] == "required",
                    "labels": (),
                    "notes": {},
                    "secondary": secondary,
                }
            else:
                if cur is None:
                    raise ValueError(f"schema line {n}: label outside a field block")
                label, _, note = line.partition("\t")
                cur["labels"] = cur["labels"] + (label.strip(),)
                cur["notes"][label.strip()] = note.strip()
        flush()
        if kind is None:
            raise ValueError("schema text has no 'kind' line")
        return cls(kind, tuple(fields))


def _field(kind, name, entries, secondary=None) -> SchemaField:
    return SchemaField(
        kind=kind,
        name=name,
        required=True,
        labels=tuple(label for label, _ in entries),
        notes=dict(entries),
        secondary=secondary,
    )


MIAMI_TOPICS = [
    ("Workplace_Technical", "technical terms, commissioning, CAD, architecture terms."),
    ("Education_YouthOrganizations", "school, certificates, scouts, permission slips."),
    ("Architecture_Design", "materials, styles, famous architects."),
    ("Office_Logistics", "supplies, scheduling, file paths, emails."),
    ("Narratives_Quotations", "recounting past events or reported speech."),
    ("Casual_EverydayTalk", "greetings, jokes, small talk, banter."),
    ("Affect_Identity", "swearing, nicknames, identity/solidarity markers."),
    ("ProperNouns_NamedEntities", "sentences dominated by names, places, or awards."),
]

MIAMI_FUNCTIONS = [
    ("TechnicalTermInsertion", "inserting domain-specific words or tool names."),
    ("ProperNounNamedEntity", "naming a person, place, brand, or award."),
    ("PrecisionLexicalGap", "switching for precise expression or lexical need."),
    ("DiscourseMarker", "connective or organizing signals (e.g., you know, so)."),
    ("TopicShift", "marking a new topic or returning to one."),
    ("Narrative", "embedding a story or recounting a past event."),
    ("Quotation", "reproducing or stylizing another’s voice."),
    ("TurnManagement", "backchannels or acknowledgments (mmhm, yeah)."),
    ("AddresseeShift", "calling attention or changing addressee (hey Bob)."),
    ("Directive", "giving orders, requests, or imperatives."),
    ("Repair", "rephrasing, searching for a word, or self-correcting."),
    ("Agreement", "affirming or echoing another speaker’s stance."),
    ("StanceEmphasis", "expressing evaluation, certainty, or irony."),
    ("Humor", "jokes, teasing, or playful language."),
    ("SolidarityIdentity", "in-group markers or swearing showing closeness."),
]

FORMALITY = [
    ("Formal", "official or institutional tone; objective or procedural (e.g., announcements, reports, press releases)."),
    ("Informal", "conversational, personal, humorous, or emotional tone; includes slang, emojis, or direct address."),
]

GENRES = [
    ("News", "objective reports or summaries of events."),
    ("Personal", "emotions, reflections, or personal experiences."),
    ("Politics", "mentions politicians, elections, or government affairs."),
    ("Activism_Protest", "references to mobilizations or calls to action."),
    ("Culture_Arts", "music, literature, art."),
    ("Education", "covers schools, universities, or reforms."),
    ("Health", "health, medicine, or COVID-19."),
    ("Environment", "ecology, nature, conservation."),
    ("Sports", "athletic events or teams."),
    ("Entertainment", "celebs, humor, pop culture."),
    ("Commercial", "ads, business, or products."),
    ("Announcement", "schedules, program info."),
    ("Opinion", "commentary or evaluation of public issues."),
    ("Other", "fallback for unclear categories."),
]

GUA_TOPICS = [
    ("Government_Announcement", "official statements from institutions."),
    ("Legislation_Policy", "mentions laws, regulations, or legislative actions."),
    ("Protest_Report", "reports describing protests or demonstrations."),
    ("Mobilization_Call", "calls for strikes, activism."),
    ("Corruption_Donations_Procurement", "references of such."),
    ("PublicAdministration_Changes", "appointments or administrative shifts."),
    ("Procurement_Licitation", "references to tenders or contract awards."),
    ("Infrastructure_Contract", "mentions construction or development projects."),
    ("Transport_PublicSafety", "transportation or safety-related content."),
    ("Agriculture_Reactivation", "farming or agrarian reform."),
    ("Rural_Community_Issues", "rural life or community concerns."),
    ("Indigenous_CommunityAid", "Indigenous rights or aid programs."),
    ("Education_Policy_University", "education reforms or student activism."),
    ("Cultural_Event_Festival", "festivals or public celebrations."),
    ("Cultural_Heritage_Archive", "heritage preservation or archives."),
    ("Media_Broadcast_Notice", "broadcast or program announcements."),
    ("Legal_Judicial", "courts, rulings, or judicial."),
    ("Crime_Investigation", "mentions crimes or investigations."),
    ("Health_COVID", "COVID-19, vaccines, or health effects."),
    ("PublicHealth_Services", "hospitals or medical access."),
    ("Environment_NationalParks", "conservation or protected areas."),
    ("Commercial_Product", "product promotions or corporate content."),
    ("Shopping_PersonalPurchase", "consumer life or buying habits."),
    ("Personal_Emotional", "emotional reflections or personal states."),
    ("Humor_Rant", "jokes, sarcasm, or venting."),
    ("Sports_Event", "matches, scores, or athletes."),
    ("Entertainment_Music_Film", "mentions music, artists, or movies."),
    ("Opinion_Commentary", "subjective political or social commentary."),
    ("UserMention_Request_Response", "direct replies, mentions, or user interactions."),
    ("Other", "unclear or uncategorizable tweets."),
]

MIAMI_SCHEMA = AnnotationSchema(
    CorpusKind.MIAMI,
    (
        _field(FieldKind.MIAMI_TOPIC, "topic", MIAMI_TOPICS),
        _field(FieldKind.MIAMI_FUNCTION, "function", MIAMI_FUNCTIONS, secondary="secondary_function"),
    ),
)

GUASPA_SCHEMA = AnnotationSchema(
    CorpusKind.GUASPA,
    (
        _field(FieldKind.FORMALITY, "formality", FORMALITY),
        _field(FieldKind.GENRE, "genre", GENRES),
        _field(FieldKind.GUA_TOPIC, "topic", GUA_TOPICS, secondary="secondary_topic"),
    ),
)


def builtin_schema(kind: CorpusKind | str) -> AnnotationSchema:
    return MIAMI_SCHEMA if CorpusKind.parse(kind) is CorpusKind.MIAMI else GUASPA_SCHEMA


# --- canonicalization -------------------------------------------------------

_SEP = re.compile(r"[\s_\-]+")


def unify(label: str) -> str:
    """Lower-case and collapse runs of ``_``, ``-`` and whitespace to ``_``."""
    return _SEP.sub("_", label.strip()).strip("_").lower()


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (unit-cost insert, delete, substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class CanonLabel:
    field: FieldKind
    label: str
    unknown: bool = False
    # how the label was reached: exact | unified | fuzzy | unknown
    method: str = field(default="exact", compare=False)


def canonicalize_label(raw: str, fkind: FieldKind, schema: AnnotationSchema) -> CanonLabel:
    labels = schema.field(fkind).labels
    raw = raw.strip()
    if raw in labels:
        return CanonLabel(fkind, raw)

    key = unify(raw)
    for label in labels:
        if unify(label) == key:
            return CanonLabel(fkind, label, method="unified")

    scored = sorted((edit_distance(key, unify(label)), i) for i, label in enumerate(labels))
    if scored and scored[0][0] <= MAX_EDIT_DISTANCE:
        # two labels equally close: refuse to guess
        if len(scored) == 1 or scored[1][0] > scored[0][0]:
            return CanonLabel(fkind, labels[scored[0][1]], method="fuzzy")
    return CanonLabel(fkind, fkind.sentinel, unknown=True, method="unknown")


@dataclass(frozen=True)
class FieldCheck:
    name: str
    kind: FieldKind
    raw: Optional[str]
    value: Optional[CanonLabel]
    secondary: bool = False
    missing: bool = False
    fuzzy: bool = False
    sentinel: bool = False
    dropped: bool = False

    @property
    def corrected(self) -> bool:
        if self.value is None:
            return self.dropped
        return self.value.method != "exact"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[FieldCheck, ...]

    @property
    def missing_required(self) -> list[str]:
        return [c.name for c in self.checks if c.missing and not c.secondary]

    @property
    def corrections(self) -> int:
        return sum(1 for c in self.checks if c.corrected)

    @property
    def ok(self) -> bool:
        return not self.missing_required

    def labels(self) -> dict[str, CanonLabel]:
        return {c.name: c.value for c in self.checks if not c.secondary and c.value is not None}

    def secondary(self) -> Optional[CanonLabel]:
        for c in self.checks:
            if c.secondary and c.value is not None:
                return c.value
        return None


_ABSENT = {"", "null", "none", "n/a", "na"}


def _blank(raw) -> bool:
    return raw is None or (isinstance(raw, str) and raw.strip().lower() in _ABSENT)


def validate_record(fields: Mapping[str, Optional[str]], schema: AnnotationSchema) -> ValidationReport:
    """Check raw ``{field name: label}`` values against ``schema``.

    Primary fields go through the full canonicalization pipeline.
    Secondary fields must match exactly or are dropped.
    """
    checks: list[FieldCheck] = []
    for f in schema.fields:
        raw = fields.get(f.name)
        if _blank(raw):
            checks.append(FieldCheck(f.name, f.kind, raw, None, missing=f.required))
        else:
            canon = canonicalize_label(str(raw), f.kind, schema)
            checks.append(
                FieldCheck(
                    f.name,
                    f.kind,
                    raw,
                    canon,
                    fuzzy=canon.method == "fuzzy",
                    sentinel=canon.unknown,
                )
            )
    for f in schema.fields:
        if not f.secondary:
            continue
        raw = fields.get(f.secondary)
        if _blank(raw):
            checks.append(FieldCheck(f.secondary, f.kind, raw, None, secondary=True, missing=True))
        elif str(raw).strip() in f.labels:
            checks.append(FieldCheck(f.secondary, f.kind, raw, CanonLabel(f.kind, str(raw).strip()), secondary=True))
        else:
            checks.append(FieldCheck(f.secondary, f.kind, raw, None, secondary=True, dropped=True))
    return ValidationReport(tuple(checks))

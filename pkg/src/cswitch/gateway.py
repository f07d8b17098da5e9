"""Gateway implementations behind ``Gateway.complete(bundle) -> str``.

* ``LiveGateway`` posts to a chat-completions endpoint.
* ``RecordingGateway`` wraps another gateway and appends every response
  to a cassette; ``ReplayGateway`` serves responses back from it.
* ``RuleStubGateway`` labels sentences from surface cues; tests only.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from collections import defaultdict
from pathlib import Path

import requests

from .annotator import PromptBundle
from .corpus_model import CorpusKind
from .errors import GatewayUnavailable, ParseError, ReplayMiss, TransportError
from .taxonomy import AnnotationSchema

URL_ENV = "CSWITCH_GATEWAY_URL"
KEY_ENV = "CSWITCH_GATEWAY_KEY"


class LiveGateway:
    def __init__(self, url: str, api_key: str, timeout: float = 60.0, session: requests.Session | None = None):
        if not url.rstrip("/").endswith("/chat/completions"):
            url = url.rstrip("/") + "/chat/completions"
        self.url = url
        self.api_key = api_key
        self.timeout = timeout
        self.session = session or requests.Session()
        self.gateway_id = "live"

    @classmethod
    def from_env(cls, env=os.environ) -> "LiveGateway":
        url, key = env.get(URL_ENV), env.get(KEY_ENV)
        if not url or not key:
            raise GatewayUnavailable(f"live gateway needs {URL_ENV} and {KEY_ENV} to be set")
        return cls(url, key)

    @staticmethod
    def request_body(bundle: PromptBundle) -> dict:
        return {
            "model": bundle.params.model_name,
            "temperature": bundle.params.temperature,
            "max_tokens": bundle.params.max_tokens,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
        }

    def complete(self, bundle: PromptBundle) -> str:
        try:
            resp = self.session.post(
                self.url,
                json=self.request_body(bundle),
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
        if not isinstance(content, str):
            raise TransportError("completion content is not a string")
        return content


class Cassette:
    """Append-only ``{"cache_key", "response"}`` JSON-lines store.

    Repeated keys (retries) are kept in order; replay serves them back
    in the same order and then keeps returning the last one.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, list[str]] = defaultdict(list)
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        obj = json.loads(line)
                        self._entries[obj["cache_key"]].append(obj["response"])
                    except (ValueError, KeyError, TypeError):
                        raise ParseError(n, f"bad cassette entry in {self.path}") from None

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def responses(self, key: str) -> list[str]:
        return list(self._entries.get(key, ()))

    def append(self, key: str, response: str) -> None:
        line = json.dumps({"cache_key": key, "response": response}, ensure_ascii=False) + "\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
            self._entries[key].append(response)


class RecordingGateway:
    def __init__(self, inner, cassette: Cassette):
        self.inner = inner
        self.cassette = cassette
        self.gateway_id = f"record:{inner.gateway_id}"

    def complete(self, bundle: PromptBundle) -> str:
        text = self.inner.complete(bundle)
        self.cassette.append(bundle.cache_key, text)
        return text


class ReplayGateway:
    def __init__(self, cassette: Cassette):
        self.cassette = cassette
        self.gateway_id = f"replay:{cassette.path.name}"
        self._cursor: dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()

    def complete(self, bundle: PromptBundle) -> str:
        key = bundle.cache_key
        stored = self.cassette.responses(key)
        if not stored:
            raise ReplayMiss(key)
        with self._lock:
            i = self._cursor[key]
            self._cursor[key] = i + 1
        return stored[min(i, len(stored) - 1)]


# --- rule stub --------------------------------------------------------------

_TARGET = re.compile(r"^## Target\n(.*)\Z", re.S | re.M)

_CUES = {
    "topic": [
        (("school", "escuela", "scouts", "class", "teacher"), "Education_YouthOrganizations"),
        (("office", "email", "oficina", "schedule"), "Office_Logistics"),
        (("said", "dijo", "told", "me dice"), "Narratives_Quotations"),
        (("computer", "cad", "software", "commissioning"), "Workplace_Technical"),
        (("gobierno", "ministerio", "ministro"), "Government_Announcement"),
        (("ley", "senado", "diputados"), "Legislation_Policy"),
        (("covid", "vacuna", "salud"), "Health_COVID"),
        (("@",), "UserMention_Request_Response"),
        (("jaja", "jajaja", "😂"), "Humor_Rant"),
    ],
    "function": [
        (("you know", "so", "pues", "entonces"), "DiscourseMarker"),
        (("said", "dijo", "told"), "Quotation"),
        (("yeah", "mmhm", "sí", "okay"), "TurnManagement"),
    ],
    "genre": [
        (("gobierno", "ministerio", "ministro"), "Politics"),
        (("jaja", "😂", "amo"), "Personal"),
        (("partido", "gol"), "Sports"),
    ],
}


def _target_row(user_text: str) -> dict[str, str]:
    m = _TARGET.search(user_text)
    if not m:
        raise TransportError("stub: prompt has no target section")
    row = {}
    for line in m.group(1).splitlines():
        key, sep, value = line.partition(": ")
        if sep:
            row[key] = value
    return row


class RuleStubGateway:
    """Deterministic, always schema-valid labels from surface cues.

    Cue lists are matched on whole words of the lower-cased sentence;
    with no cue the label is picked by a stable hash of the sentence.
    """

    def __init__(self, schema: AnnotationSchema):
        self.schema = schema
        self.gateway_id = "stub:rules"

    def _pick(self, name: str, labels: tuple[str, ...], sentence: str) -> str:
        low = sentence.lower()
        words = set(re.findall(r"\w+|[^\w\s]", low))
        for cues, label in _CUES.get(name, ()):
            if label in labels and any((c in words) if " " not in c else (c in low) for c in cues):
                return label
        h = hashlib.sha256(f"{name}\0{sentence}".encode("utf-8")).digest()
        return labels[int.from_bytes(h[:8], "big") % len(labels)]

    def complete(self, bundle: PromptBundle) -> str:
        row = _target_row(bundle.user_text)
        sentence = row.get("sentence", "")
        out: dict[str, object] = {"sent_id": int(row["sent_id"])}
        for f in self.schema.fields:
            if f.kind.name == "FORMALITY":
                informal = "@" in sentence or any(ord(ch) > 0x2000 for ch in sentence)
                out[f.name] = "Informal" if informal else self._pick(f.name, f.labels, sentence)
            else:
                out[f.name] = self._pick(f.name, f.labels, sentence)
        if self.schema.corpus_kind is CorpusKind.MIAMI and "?" in sentence:
            out["secondary_function"] = "Directive"
        return json.dumps(out, ensure_ascii=False)

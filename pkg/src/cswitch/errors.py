"""Exception hierarchy.

``DataError`` subclasses map to CLI exit status 1; anything else that
escapes is a bug.
"""

from __future__ import annotations


class DataError(Exception):
    """Bad input data or an unrecoverable pipeline condition."""


class UnmappedTag(DataError):
    def __init__(self, raw: str, line: int | None = None):
        self.raw = raw
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}raw tag {raw!r} has no mapping and no default is set")


class ParseError(DataError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateSentId(ParseError):
    def __init__(self, line: int, sent_id: int):
        self.sent_id = sent_id
        super().__init__(line, f"duplicate sent_id {sent_id}")


class EmptyCorpus(DataError):
    pass


class SchemaMismatch(DataError):
    pass


# Response-level failures; these are retried and end up in the failure list.
class ResponseError(DataError):
    pass


class NonStrictJson(ResponseError):
    pass


class MissingSentId(ResponseError):
    pass


class UnexpectedKey(ResponseError):
    pass


class MissingField(ResponseError):
    pass


class SentIdMismatch(ResponseError):
    pass


class GatewayError(DataError):
    pass


class TransportError(GatewayError):
    pass


class ReplayMiss(GatewayError):
    def __init__(self, cache_key: str):
        self.cache_key = cache_key
        super().__init__(f"no recorded response for cache key {cache_key}")


class GatewayUnavailable(GatewayError):
    pass


class UnknownAxis(DataError):
    pass


class DanglingSentId(DataError):
    pass


class BadShape(DataError):
    pass


class SampleTooLarge(DataError):
    pass


class IncompleteSheet(DataError):
    def __init__(self, unset: list[int]):
        self.unset = unset
        super().__init__(f"verdicts missing for sent_id(s): {', '.join(map(str, unset))}")

import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cswitch.corpus_model import CoreLangTag, CorpusKind, Gender
from cswitch.errors import DuplicateSentId, ParseError, UnmappedTag
from cswitch.ingest import (
    GUASPA_TAGS,
    MIAMI_TAGS,
    TagMapping,
    filter_intrasentential,
    merge_raw_tag,
    parse_corpus,
    serialize_corpus,
)

from conftest import corpus, line, sent


def test_merge_raw_tag_guaspa():
    assert merge_raw_tag("es", GUASPA_TAGS) is CoreLangTag.SPA
    assert merge_raw_tag("gn", GUASPA_TAGS) is CoreLangTag.GN
    assert merge_raw_tag("emoji", GUASPA_TAGS) is CoreLangTag.OTHER
    assert merge_raw_tag("ne-per", GUASPA_TAGS) is CoreLangTag.SPA
    assert merge_raw_tag("foreign", GUASPA_TAGS) is CoreLangTag.OTHER
    assert merge_raw_tag("mix", GUASPA_TAGS) is CoreLangTag.GN_SPA


def test_merge_raw_tag_unmapped():
    with pytest.raises(UnmappedTag):
        merge_raw_tag("fr", MIAMI_TAGS)
    with pytest.raises(UnmappedTag):
        merge_raw_tag("xx-unlisted", GUASPA_TAGS)
    assert merge_raw_tag("fr", TagMapping({}, CoreLangTag.OTHER)) is CoreLangTag.OTHER


def test_tag_mapping_file(tmp_path):
    p = tmp_path / "map.tsv"
    p.write_text("# comment\nes\tspa\nGN\tgn\n*\tother\n", encoding="utf-8")
    m = TagMapping.load(p)
    assert merge_raw_tag("GN", m) is CoreLangTag.GN
    assert merge_raw_tag("zz", m) is CoreLangTag.OTHER


def test_parse_smallest_valid_input():
    c = parse_corpus(io.BytesIO(line(1, ["spa", "eng", "punc"])), "miami")
    assert len(c) == 1
    assert len(c.sentences[0].tokens) == 3
    assert c.sentences[0].lang_tag == "spa+eng"


def test_parse_ignores_supplied_lang_tag():
    c = parse_corpus([line(1, ["spa", "spa"], lang_tag="spa+eng")], "miami")
    assert c.sentences[0].lang_tag == "spa"


def test_parse_null_gender_and_age():
    c = parse_corpus([line(1, ["spa", "eng"], gender=None, age=None)], "miami")
    assert c.sentences[0].meta.gender is Gender.UNKNOWN
    assert c.sentences[0].meta.age is None


def test_parse_guaspa_merges_tags():
    c = parse_corpus([line(5, ["es", "gn", "ne-loc", "emoji"])], "guaspa")
    assert [t.core for t in c.sentences[0].tokens] == [
        CoreLangTag.SPA, CoreLangTag.GN, CoreLangTag.SPA, CoreLangTag.OTHER,
    ]
    assert [t.raw_tag for t in c.sentences[0].tokens] == ["es", "gn", "ne-loc", "emoji"]


@pytest.mark.parametrize(
    "data, exc, lineno",
    [
        (b"not json\n", ParseError, 1),
        (line(1, ["spa"]) + b"[1, 2]\n", ParseError, 2),
        (line(1, []), ParseError, 1),
        (line(1, ["punc", "punc"]), ParseError, 1),
        (line(1, ["spa"], gender="X"), ParseError, 1),
        (line(1, ["spa"], age=-3), ParseError, 1),
        (line(1, ["spa"], extra_field=1), ParseError, 1),
        (line(1, ["spa"]) + line(1, ["eng"]), DuplicateSentId, 2),
        (line(1, ["spa"]) + b"\n" + line(2, ["zz"]), UnmappedTag, 3),
    ],
)
def test_parse_errors_carry_line(data, exc, lineno):
    with pytest.raises(exc) as info:
        parse_corpus(io.BytesIO(data), "miami")
    assert info.value.line == lineno


def test_parse_rejects_bool_sent_id_and_missing_field():
    obj = json.loads(line(1, ["spa"]))
    obj["sent_id"] = True
    with pytest.raises(ParseError):
        parse_corpus([json.dumps(obj).encode()], "miami")
    del obj["situation"]
    obj["sent_id"] = 1
    with pytest.raises(ParseError, match="situation"):
        parse_corpus([json.dumps(obj).encode()], "miami")


def test_parse_rejects_illegal_tag_for_kind():
    # "other" maps fine under a permissive mapping but is not legal in Miami
    with pytest.raises(ParseError, match="not legal"):
        parse_corpus([line(1, ["spa", "x"])], "miami", TagMapping({"spa": CoreLangTag.SPA}, CoreLangTag.OTHER))


def test_parse_invalid_utf8():
    with pytest.raises(ParseError, match="UTF-8"):
        parse_corpus([b"\xff\xfe\n"], "miami")


def test_filter_intrasentential():
    assert len(filter_intrasentential(corpus("miami", [sent(["spa", "spa"])]))) == 0
    kept = filter_intrasentential(corpus("miami", [sent(["spa", "eng", "spa"])]))
    assert len(kept) == 1
    dropped = filter_intrasentential(corpus("guaspa", [sent(["spa", "gn&spa"])]))
    assert len(dropped) == 0


def test_filter_preserves_order():
    ss = [sent(["spa", "eng"], sent_id=i) for i in (5, 3, 9)]
    c = filter_intrasentential(corpus("miami", ss + [sent(["eng"], sent_id=1)]))
    assert [s.sent_id for s in c.sentences] == [5, 3, 9]


records = st.lists(
    st.tuples(
        st.lists(st.sampled_from(["spa", "eng", "punc", "eng&spa"]), min_size=1, max_size=8).filter(
            lambda ts: any(t != "punc" for t in ts)
        ),
        st.sampled_from(["M", "F", None]),
        st.one_of(st.none(), st.integers(0, 99)),
    ),
    max_size=15,
)


@settings(max_examples=60)
@given(records)
def test_round_trip_and_token_conservation(rows):
    data = b"".join(line(i, tags, gender=g, age=a) for i, (tags, g, a) in enumerate(rows))
    c = parse_corpus(io.BytesIO(data), CorpusKind.MIAMI)
    assert c.token_count == sum(len(tags) for tags, _, _ in rows)
    again = parse_corpus(io.BytesIO(serialize_corpus(c)), CorpusKind.MIAMI)
    assert again == c
    once = filter_intrasentential(c)
    assert filter_intrasentential(once) == once

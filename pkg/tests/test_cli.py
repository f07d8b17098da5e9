import argparse
import json
import random
import subprocess
import sys

import pytest

from cswitch.annotator import annotate_batch, default_exemplars
from cswitch.cli import RunConfig, main, resolve_config
from cswitch.gateway import Cassette, RecordingGateway, RuleStubGateway
from cswitch.ingest import read_corpus
from cswitch.taxonomy import builtin_schema

from conftest import line

SUBCOMMANDS = ("ingest", "stats", "annotate", "analyze", "report", "review-sample", "review-score")


def miami_file(path, n=60, seed=0):
    rng = random.Random(seed)
    data = b""
    for i in range(1, n + 1):
        tags = [rng.choice(["spa", "eng"]) for _ in range(rng.randint(2, 9))] + ["punc"]
        if i % 10 == 0:
            tags = ["spa", "spa", "punc"]  # monolingual, dropped by ingest
        data += line(i, tags, gender=rng.choice(["M", "F", None]), age=rng.randint(10, 80))
    path.write_bytes(data)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_help_lists_subcommands():
    res = subprocess.run([sys.executable, "-m", "cswitch", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in SUBCOMMANDS:
        assert name in res.stdout


def test_stats_writes_block(tmp_path, capsys):
    src = miami_file(tmp_path / "m.jsonl")
    code, out, _ = run(capsys, "stats", src, "--kind", "miami", "--out", tmp_path / "o")
    assert code == 0
    assert "sentences = 60" in out
    assert (tmp_path / "o" / "stats_miami.txt").read_text() == out
    obj = json.loads((tmp_path / "o" / "stats_miami.json").read_text())
    assert obj["sentence_count"] == 60


def test_ingest_filters(tmp_path, capsys):
    src = miami_file(tmp_path / "m.jsonl")
    code, out, _ = run(capsys, "ingest", src, "--kind", "miami", "--out", tmp_path / "o")
    assert code == 0
    kept = (tmp_path / "o" / "corpus_miami.jsonl").read_text().splitlines()
    assert "read = 60" in out
    assert len(kept) == int(out.split("kept = ")[1].split()[0]) <= 54
    assert all("+" in json.loads(k)["lang_tag"] for k in kept)


def pipeline(tmp_path, capsys):
    src = miami_file(tmp_path / "m.jsonl")
    o = tmp_path / "o"
    assert run(capsys, "ingest", src, "--kind", "miami", "--out", o)[0] == 0
    corpus = o / "corpus_miami.jsonl"
    assert run(capsys, "annotate", corpus, "--kind", "miami", "--out", o, "--mode", "stub")[0] == 0
    return corpus, o


def test_annotate_stub_then_report_and_review(tmp_path, capsys):
    corpus, o = pipeline(tmp_path, capsys)
    records = (o / "annotations_miami.jsonl").read_text().splitlines()
    assert len(records) == len(corpus.read_text().splitlines())
    assert (o / "failures_miami.jsonl").read_text() == ""

    code, out, _ = run(capsys, "report", corpus, "--kind", "miami", "--out", o,
                       "--annotations", o / "annotations_miami.jsonl")
    assert code == 0
    for stem in ("topic_by_gender", "function_by_gender"):
        for suffix in ("counts.csv", "percent.csv", "percent.md"):
            assert (o / "tables" / f"miami_{stem}_{suffix}").exists()
    for stem in ("topic_by_dominance", "function_by_dominance"):
        assert (o / "charts" / f"miami_{stem}.svg").read_text().startswith("<?xml")

    sheets = []
    for _ in range(2):
        code, _, _ = run(capsys, "review-sample", corpus, "--kind", "miami", "--out", o,
                         "--annotations", o / "annotations_miami.jsonl", "--seed", 7, "--n", 10)
        assert code == 0
        sheets.append((o / "review_miami_seed7.csv").read_bytes())
    assert sheets[0] == sheets[1]
    assert len(sheets[0].decode().splitlines()) == 11


def test_review_score_prints(tmp_path, capsys):
    header = ("sent_id,sentence,formality,genre,topic,secondary_topic,"
              "formality_verdict,genre_verdict,topic_verdict,secondary_topic_verdict\n")
    rows = []
    for i in range(30):
        v = ["C"] * 4
        if i < 7:
            v[i % 4] = "I"
        rows.append(f"{i},s,Formal,News,Other,Other," + ",".join(v))
    sheet = tmp_path / "sheet.csv"
    sheet.write_text(header + "\n".join(rows) + "\n")
    code, out, _ = run(capsys, "review-score", sheet, "--kind", "guaspa", "--out", tmp_path)
    assert code == 0
    assert "94.17% (113/120)" in out
    assert (tmp_path / "review_score_guaspa.txt").read_text() == out


def test_replay_twice_byte_identical(tmp_path, capsys):
    corpus, o = pipeline(tmp_path, capsys)
    # record the stub through the recording wrapper to get a cassette
    schema = builtin_schema("miami")
    cas = tmp_path / "c.jsonl"
    rows = list(read_corpus(corpus, "miami").sentences)
    annotate_batch(rows, RecordingGateway(RuleStubGateway(schema), Cassette(cas)), schema,
                   exemplars=default_exemplars("miami"))
    outs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        code, _, _ = run(capsys, "annotate", corpus, "--kind", "miami", "--out", d, "--mode", "replay", "--cassette", cas)
        assert code == 0
        outs.append(((d / "annotations_miami.jsonl").read_bytes(), (d / "failures_miami.jsonl").read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1] == b""


@pytest.mark.parametrize(
    "argv",
    [
        ["stats", "x.jsonl"],  # no kind
        ["stats", "x.jsonl", "--kind", "bangor"],
        ["annotate", "x.jsonl", "--kind", "miami", "--mode", "replay"],
        ["annotate", "x.jsonl", "--kind", "miami", "--mode", "replay", "--cassette", "/nonexistent/c.jsonl"],
        ["annotate", "x.jsonl", "--kind", "miami", "--batch-size", "7"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv, monkeypatch):
    monkeypatch.delenv("CSWITCH_KIND", raising=False)
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_data_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_bytes(line(1, ["spa", "eng"]) + line(1, ["spa", "eng"]))
    code, _, err = run(capsys, "stats", bad, "--kind", "miami", "--out", tmp_path)
    assert code == 1
    assert err.startswith("error: DuplicateSentId:")
    code, _, err = run(capsys, "stats", tmp_path / "missing.jsonl", "--kind", "miami", "--out", tmp_path)
    assert code == 1 and err.startswith("error: FileNotFoundError:")


def test_live_mode_without_env_exits_1(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("CSWITCH_GATEWAY_URL", raising=False)
    monkeypatch.delenv("CSWITCH_GATEWAY_KEY", raising=False)
    src = miami_file(tmp_path / "m.jsonl", n=3)
    code, _, err = run(capsys, "annotate", src, "--kind", "miami", "--out", tmp_path, "--mode", "live")
    assert code == 1 and "GatewayUnavailable" in err


def test_config_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# settings\nseed = 3\nsample_size = 12\nkind = guaspa\nmax-concurrency = 2\n")
    args = argparse.Namespace(config=str(conf), seed=None, sample_size=None, kind=None, max_concurrency=None)
    env = {"CSWITCH_SEED": "5", "CSWITCH_MAX_CONCURRENCY": "6"}
    cfg = resolve_config(args, env)
    assert (cfg.seed, cfg.sample_size, cfg.kind, cfg.max_concurrency) == (5, 12, "guaspa", 6)
    args.seed = 9
    assert resolve_config(args, env).seed == 9
    assert resolve_config(argparse.Namespace(), {}) == RunConfig()


def test_config_rejects_unknown_key(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("colour = blue\n")
    with pytest.raises(SystemExit) as info:
        main(["stats", "x.jsonl", "--kind", "miami", "--config", str(conf)])
    assert info.value.code == 2

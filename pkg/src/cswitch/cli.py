"""Command-line entry point.

Settings resolve as: flags > ``CSWITCH_<NAME>`` environment variables >
``--config`` file (flat ``key = value``) > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from . import analysis, chart
from .annotator import (
    DEFAULT_MODEL,
    GatewayPolicy,
    ModelParams,
    annotate_batch,
    default_exemplars,
    dump_records,
    load_exemplars,
    load_records,
)
from .corpus_model import CorpusKind
from .errors import DataError
from .gateway import Cassette, LiveGateway, RecordingGateway, ReplayGateway, RuleStubGateway
from .ingest import TagMapping, filter_intrasentential, read_corpus, serialize_corpus
from .metrics import corpus_stats
from .review import ReviewSheet, sample_for_review, score_review
from .taxonomy import builtin_schema

log = logging.getLogger("cswitch")

ENV_PREFIX = "CSWITCH_"
MODES = ("live", "record", "replay", "stub")


@dataclass
class RunConfig:
    kind: Optional[str] = None
    out: str = "out"
    mode: str = "stub"
    cassette: Optional[str] = None
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 200
    batch_size: int = 50
    max_concurrency: int = 4
    max_retries: int = 2
    seed: int = 0
    sample_size: int = 30
    genre_top_n: int = 8
    topic_min_total: int = 15
    chart_genre_top: int = 10
    chart_topic_top: int = 15
    tag_map: Optional[str] = None
    exemplars: Optional[str] = None

    @property
    def corpus_kind(self) -> CorpusKind:
        return CorpusKind.parse(self.kind)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


def _coerce(name: str, raw: str):
    default = RunConfig.__dataclass_fields__[name].default
    target = type(default) if default is not None else str
    if target is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return target(raw.strip())


def read_config_file(path: str | Path) -> dict:
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in known:
            raise ValueError(f"{path}:{n}: unknown or malformed setting {line!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_config(args: argparse.Namespace, env=os.environ) -> RunConfig:
    cfg = RunConfig()
    layers = []
    if getattr(args, "config", None):
        layers.append(read_config_file(args.config))
    layers.append(
        {
            f.name: _coerce(f.name, env[ENV_PREFIX + f.name.upper()])
            for f in fields(RunConfig)
            if ENV_PREFIX + f.name.upper() in env
        }
    )
    layers.append({k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__ and v is not None})
    for layer in layers:
        for k, v in layer.items():
            setattr(cfg, k, v)
    return cfg


# --- subcommands ------------------------------------------------------------

def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _load_corpus(cfg: RunConfig, path: str, filter_cs: bool = False):
    mapping = TagMapping.load(cfg.tag_map) if cfg.tag_map else None
    corpus = read_corpus(path, cfg.corpus_kind, mapping)
    return filter_intrasentential(corpus) if filter_cs else corpus


def cmd_ingest(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg, args.input)
    kept = corpus if args.no_filter else filter_intrasentential(corpus)
    path = cfg.out_dir / f"corpus_{cfg.corpus_kind.value}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_corpus(kept))
    print(f"read = {len(corpus)}\nkept = {len(kept)}\nwritten = {path}")
    return 0


def _stats(cfg: RunConfig, corpus) -> str:
    stats = corpus_stats(corpus)
    stem = f"stats_{cfg.corpus_kind.value}"
    _write(cfg.out_dir / f"{stem}.txt", stats.to_text())
    _write(cfg.out_dir / f"{stem}.json", stats.to_json())
    return stats.to_text()


def cmd_stats(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg, args.input, filter_cs=args.filter)
    sys.stdout.write(_stats(cfg, corpus))
    return 0


def _gateway(cfg: RunConfig, schema):
    if cfg.mode == "stub":
        return RuleStubGateway(schema)
    if cfg.mode == "replay":
        return ReplayGateway(Cassette(cfg.cassette))
    live = LiveGateway.from_env()
    if cfg.mode == "record":
        return RecordingGateway(live, Cassette(cfg.cassette))
    return live


def cmd_annotate(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg, args.input)
    schema = builtin_schema(cfg.corpus_kind)
    exemplars = load_exemplars(cfg.exemplars) if cfg.exemplars else default_exemplars(cfg.corpus_kind)
    policy = GatewayPolicy(cfg.max_retries, cfg.batch_size, cfg.max_concurrency)
    params = ModelParams(cfg.model_name, cfg.temperature, cfg.max_tokens)
    kind = cfg.corpus_kind.value
    rec_path = cfg.out_dir / f"annotations_{kind}.jsonl"
    fail_path = cfg.out_dir / f"failures_{kind}.jsonl"
    _write(rec_path, "")
    _write(fail_path, "")

    def checkpoint(part):
        with open(rec_path, "a", encoding="utf-8") as fh:
            fh.write(dump_records(part.records, schema))
        with open(fail_path, "a", encoding="utf-8") as fh:
            for f in part.failures:
                fh.write(json.dumps(f.to_record(), ensure_ascii=False) + "\n")

    result = annotate_batch(
        list(corpus.sentences), _gateway(cfg, schema), schema, policy, exemplars, params, checkpoint
    )
    print(f"records = {len(result.records)}\nfailures = {len(result.failures)}\nwritten = {rec_path}")
    return 0


def _analyze(cfg: RunConfig, corpus, records) -> list[Path]:
    kind = cfg.corpus_kind
    schema = builtin_schema(kind)
    written = []
    specs = analysis.standard_tables(kind, cfg.genre_top_n, cfg.topic_min_total)
    for counts, pct in analysis.build_tables(records, corpus, specs, schema):
        stem = f"{kind.value}_{analysis.table_stem(counts)}"
        written.append(_write(cfg.out_dir / "tables" / f"{stem}_counts.csv", analysis.render_table(counts, "csv")))
        written.append(_write(cfg.out_dir / "tables" / f"{stem}_percent.csv", analysis.render_table(pct, "csv")))
        written.append(_write(cfg.out_dir / "tables" / f"{stem}_percent.md", analysis.render_table(pct, "markdown")))
    for row, col, cap in analysis.standard_charts(kind, cfg.chart_genre_top, cfg.chart_topic_top):
        counts = analysis.crosstab(records, corpus, row, col, schema)
        if cap is not None:
            counts = analysis.truncate_rows(counts, cap)
        data = chart.emit_chart_data(counts, allow_empty=True)
        stem = f"{kind.value}_{data.stem}"
        written.append(_write(cfg.out_dir / "charts" / f"{stem}.svg", data.svg))
        written.append(_write(cfg.out_dir / "charts" / f"{stem}.csv", data.csv))
    return written


def cmd_analyze(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg, args.input)
    records = load_records(args.annotations, builtin_schema(cfg.corpus_kind))
    for path in _analyze(cfg, corpus, records):
        print(path)
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg, args.input)
    records = load_records(args.annotations, builtin_schema(cfg.corpus_kind))
    sys.stdout.write(_stats(cfg, corpus))
    for path in _analyze(cfg, corpus, records):
        print(path)
    return 0


def cmd_review_sample(cfg: RunConfig, args) -> int:
    corpus = _load_corpus(cfg, args.input)
    records = load_records(args.annotations, builtin_schema(cfg.corpus_kind))
    sheet = sample_for_review(records, corpus, cfg.sample_size, cfg.seed)
    path = _write(cfg.out_dir / f"review_{cfg.corpus_kind.value}_seed{cfg.seed}.csv", sheet.to_csv())
    print(f"rows = {len(sheet.rows)}\nwritten = {path}")
    return 0


def cmd_review_score(cfg: RunConfig, args) -> int:
    sheet = ReviewSheet.from_csv(Path(args.sheet).read_text(encoding="utf-8"), cfg.corpus_kind)
    text = score_review(sheet).to_text()
    _write(cfg.out_dir / f"review_score_{cfg.corpus_kind.value}.txt", text)
    sys.stdout.write(text)
    return 0


# --- parser -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=("miami", "guaspa"), help="corpus kind")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--tag-map", dest="tag_map", help="raw<TAB>core tag mapping file")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cswitch", description="Code-switched corpus annotation and analysis.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("ingest", help="parse a corpus file and keep code-switched sentences")
    _common(p)
    p.add_argument("input")
    p.add_argument("--no-filter", action="store_true", help="keep monolingual sentences")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="token proportions, sentence lengths, switch density")
    _common(p)
    p.add_argument("input")
    p.add_argument("--filter", action="store_true", help="filter to code-switched sentences first")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("annotate", help="label sentences through a gateway")
    _common(p)
    p.add_argument("input")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--cassette", help="record/replay store")
    p.add_argument("--model-name", dest="model_name")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-tokens", dest="max_tokens", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-concurrency", dest="max_concurrency", type=int)
    p.add_argument("--max-retries", dest="max_retries", type=int)
    p.add_argument("--exemplars", help="few-shot exemplar file")
    p.set_defaults(func=cmd_annotate)

    for name, func, helptext in (
        ("analyze", cmd_analyze, "cross-tabulate annotations into tables and charts"),
        ("report", cmd_report, "stats plus every table and chart"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("input")
        p.add_argument("--annotations", required=True)
        p.add_argument("--genre-top-n", dest="genre_top_n", type=int)
        p.add_argument("--topic-min-total", dest="topic_min_total", type=int)
        p.add_argument("--chart-genre-top", dest="chart_genre_top", type=int)
        p.add_argument("--chart-topic-top", dest="chart_topic_top", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("review-sample", help="draw a seeded review sheet")
    _common(p)
    p.add_argument("input")
    p.add_argument("--annotations", required=True)
    p.add_argument("--n", dest="sample_size", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_review_sample)

    p = sub.add_parser("review-score", help="score a filled-in review sheet")
    _common(p)
    p.add_argument("sheet")
    p.set_defaults(func=cmd_review_score)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ValueError as exc:
        parser.error(str(exc))
    if cfg.kind is None:
        parser.error("--kind is required (flag, CSWITCH_KIND or config file)")
    if args.command == "annotate":
        if cfg.mode not in MODES:
            parser.error(f"mode must be one of {', '.join(MODES)}")
        if cfg.mode in ("record", "replay") and not cfg.cassette:
            parser.error(f"--mode {cfg.mode} needs --cassette")
        if cfg.mode == "replay" and not Path(cfg.cassette).exists():
            parser.error(f"cassette {cfg.cassette} does not exist")
        try:
            GatewayPolicy(cfg.max_retries, cfg.batch_size, cfg.max_concurrency)
        except ValueError as exc:
            parser.error(str(exc))
    try:
        return args.func(cfg, args)
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

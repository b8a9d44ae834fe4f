"""Command-line interface.

Subcommands mirror pipeline stages (scan/select/extract/pair/screen/
generate/export), plus run, resume, stats, and score. Exit codes:
0 success, 1 configuration error, 2 partial failure (some documents
failed), 3 fatal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, dataset, report
from .checkpoint import Stage
from .config import RunConfig
from .errors import ConfigInvalid, ConfigMismatch, CorruptCheckpoint, PdfHarvestError
from .pipeline import Pipeline, scan_corpus, write_ndjson

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_FATAL = 3

_STAGE_COMMANDS = {
    "select": Stage.SELECTED,
    "extract": Stage.EXTRACTED,
    "pair": Stage.PAIRED,
    "screen": Stage.SCREENED,
    "generate": Stage.GENERATED,
    "export": Stage.EXPORTED,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="run configuration (JSON)")
    parser.add_argument("--out", type=Path, help="output root (overrides config)")
    parser.add_argument("--workers", type=int, help="worker count (overrides config)")
    parser.add_argument(
        "--provider",
        action="append",
        default=[],
        metavar="NAME=ADDR",
        help="provider override: layout|recognizer|embedder|generator = builtin|host:port",
    )
    parser.add_argument("--input", type=Path, help="corpus directory or manifest (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdfharvest",
        description="Mine PDF corpora into multimodal instruction-tuning datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("scan", "enumerate and probe the corpus"),
        ("select", "apply the selection policy"),
        ("extract", "rasterize, analyze layout, recognize text, crop images"),
        ("pair", "embed and pair images with texts"),
        ("screen", "NSFW/PII screening"),
        ("generate", "generate instruction conversations"),
        ("export", "export the dataset"),
        ("run", "run the full pipeline"),
        ("resume", "resume an interrupted run from its checkpoint"),
        ("stats", "write corpus statistics and figures"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    score = sub.add_parser("score", help="aggregate judge scores into a report")
    score.add_argument("--rows", type=Path, required=True, help="CSV or NDJSON of judge rows")
    score.add_argument("--out", type=Path, required=True, help="report output directory")
    return parser


def _load_config(args) -> RunConfig:
    providers = {}
    for item in args.provider:
        name, _, addr = item.partition("=")
        if not addr:
            raise ConfigInvalid(f"--provider expects NAME=ADDR, got {item!r}")
        providers[name] = addr
    if args.config:
        cfg = RunConfig.from_json(args.config)
    else:
        if not args.input or not args.out:
            raise ConfigInvalid("either --config or both --input and --out are required")
        cfg = RunConfig(input=str(args.input), out=str(args.out))
    return cfg.with_overrides(
        input=args.input, out=args.out, workers=args.workers, providers=providers
    )


def _cmd_scan(cfg: RunConfig) -> int:
    cfg.validate()
    records = []
    for uri, path in scan_corpus(cfg.input):
        probe = corpus.probe_pdf(path.read_bytes(), uri)
        records.append(
            {
                "doc_id": probe.doc_id,
                "source_uri": uri,
                "page_count": probe.page_count,
                "first_page_image_count": probe.first_page_image_count,
                "parse_ok": probe.parse_ok,
            }
        )
    out = cfg.out_dir / "logs" / "scan.ndjson"
    write_ndjson(out, records)
    print(f"scanned {len(records)} documents -> {out}")
    return EXIT_OK


def _cmd_stage(cfg: RunConfig, target: Stage) -> int:
    pipe = Pipeline(cfg)
    try:
        manifest = pipe.run_to(target)
    finally:
        pipe.close()
    counts = manifest.stage_counts
    print(
        f"run {manifest.run_id}: {counts['pdfs_selected']}/{counts['pdfs_scanned']} selected, "
        f"{counts['images_extracted']} images, {counts['instructions_emitted']} instructions"
    )
    if manifest.dataset_path:
        print(f"dataset: {manifest.dataset_path}")
    if manifest.failed_docs:
        print(f"{len(manifest.failed_docs)} documents failed:", file=sys.stderr)
        for item in manifest.failed_docs:
            print(f"  {item['doc_id']} at {item['stage']}: {item['error']}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_resume(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg, resume=True)
    try:
        manifest = pipe.run()
    finally:
        pipe.close()
    print(f"resumed run {manifest.run_id}; dataset: {manifest.dataset_path}")
    return EXIT_PARTIAL if manifest.failed_docs else EXIT_OK


def _cmd_stats(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg)
    try:
        stats = pipe.write_reports()
    finally:
        pipe.close()
    print(report.render_stats_summary(stats))
    print(f"reports written under {cfg.out_dir / 'reports'}")
    return EXIT_OK


def _cmd_score(args) -> int:
    rows = dataset.read_judge_rows(args.rows)
    table = dataset.aggregate_judge_scores(rows)
    paths = report.write_score_report(table, args.out)
    for category, score in sorted(table.per_category.items()):
        print(f"{category:>16}: {score.ratio_pct:7.2f}%  (model {score.model_mean:.3f} / ref {score.reference_mean:.3f})")
    print(f"{'overall(pooled)':>16}: {table.overall_ratio_pct:7.2f}%")
    print(f"wrote {paths['csv']} and {paths['figure']}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "score":
            return _cmd_score(args)
        cfg = _load_config(args)
        if args.command == "scan":
            return _cmd_scan(cfg)
        if args.command == "resume":
            return _cmd_resume(cfg)
        if args.command == "stats":
            return _cmd_stats(cfg)
        if args.command == "run":
            return _cmd_stage(cfg, Stage.EXPORTED)
        return _cmd_stage(cfg, _STAGE_COMMANDS[args.command])
    except (ConfigInvalid, ConfigMismatch, CorruptCheckpoint) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PdfHarvestError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())

"""Pipeline orchestration: select → extract → pair → screen → generate
→ export, checkpointed per document.

Documents are processed independently (parallelizable) and all global
artifacts are rebuilt from per-document state in doc_id order, so
completion order, worker count, and interruptions never change what
gets written. Wall-clock timestamps appear only under logs/.
"""

from __future__ import annotations

import json
import random
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from threading import Lock

from . import corpus, dataset, page_extract, pairing, report, safety, textgen
from .checkpoint import Checkpoint, Stage
from .config import BUILTIN, RunConfig
from .config import prompt_hashes as config_prompt_hashes
from .errors import (
    ConfigInvalid,
    MalformedConversation,
    MissingStageLog,
    ProviderUnavailable,
    StageFatal,
)
from .providers import (
    BuiltinEmbedder,
    BuiltinGenerator,
    BuiltinLayoutProvider,
    BuiltinTextRecognizer,
    RemoteEmbedder,
    RemoteGenerator,
    RemoteLayoutProvider,
    RemoteTextRecognizer,
    SidecarClient,
)

PROVIDER_RETRIES = 3
RETRY_BACKOFF_S = 1.0


# -- small file helpers ---------------------------------------------------


def write_ndjson(path: Path, records: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    tmp.replace(path)


def read_ndjson(path: Path) -> list[dict]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def write_json(path: Path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    tmp.replace(path)


def scan_corpus(source: str) -> list[tuple[str, Path]]:
    """Corpus entries as (source_uri, path), sorted for determinism.

    A directory is walked recursively for *.pdf; a file is read as a
    newline-delimited manifest of paths."""
    root = Path(source)
    if root.is_dir():
        return [(str(p), p) for p in sorted(root.rglob("*.pdf"))]
    entries: list[tuple[str, Path]] = []
    for line in root.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        target = line[7:] if line.startswith("file://") else line
        path = Path(target)
        if not path.is_absolute():
            path = root.parent / path
        entries.append((line, path))
    return sorted(entries, key=lambda e: e[0])


@dataclass
class RunManifest:
    run_id: str
    config_hash: str
    stage_counts: dict
    failed_docs: list
    dataset_path: Path | None
    stats: dataset.CorpusStats | None

    @property
    def ok(self) -> bool:
        return not self.failed_docs


class Pipeline:
    def __init__(self, config: RunConfig, resume: bool = False):
        config.validate()
        self.config = config
        self.out = config.out_dir
        self.work = self.out / "work"
        self.logs = self.out / "logs"
        self._ckpt_path = self.out / "checkpoint.json"
        self._ckpt_lock = Lock()
        self._fail_lock = Lock()
        self.failed: list[dict] = []
        config_hash = config.config_hash()
        if resume:
            self.checkpoint = Checkpoint.load(self._ckpt_path, expected_hash=config_hash)
        elif self._ckpt_path.exists():
            # a fresh run over an existing output dir continues it if and
            # only if the configuration is unchanged
            self.checkpoint = Checkpoint.load(self._ckpt_path, expected_hash=config_hash)
        else:
            self.checkpoint = Checkpoint(run_id=config_hash[:12], config_hash=config_hash)
        self._build_providers()

    # -- providers ---------------------------------------------------------

    def _build_providers(self) -> None:
        cfg = self.config
        self._clients: dict[str, SidecarClient] = {}

        def client(role: str) -> SidecarClient:
            addr = cfg.providers[role]
            if addr not in self._clients:
                c = SidecarClient(addr)
                try:
                    c.health()
                except Exception as exc:
                    raise ConfigInvalid(f"provider {role} at {addr} unreachable: {exc}") from exc
                self._clients[addr] = c
            return self._clients[addr]

        if cfg.providers["embedder"] == BUILTIN:
            self.embedder = BuiltinEmbedder(dim=cfg.embed_dim, seed=cfg.seed)
        else:
            self.embedder = RemoteEmbedder(client("embedder"))
        if cfg.providers["generator"] == BUILTIN:
            self.generator = BuiltinGenerator(qa_pairs=cfg.qa_pairs_per_image, seed=cfg.seed)
        else:
            self.generator = RemoteGenerator(client("generator"))
        self._remote_layout = (
            RemoteLayoutProvider(client("layout"))
            if cfg.providers["layout"] != BUILTIN
            else None
        )
        self._remote_recognizer = (
            RemoteTextRecognizer(client("recognizer"))
            if cfg.providers["recognizer"] != BUILTIN
            else None
        )
        self.rules = (
            safety.RulePack.from_json(Path(cfg.rule_pack))
            if cfg.rule_pack
            else safety.RulePack.default()
        )

    def _layout_for(self, doc_bytes: bytes):
        return self._remote_layout or BuiltinLayoutProvider(doc_bytes)

    def _recognizer_for(self, doc_bytes: bytes):
        return self._remote_recognizer or BuiltinTextRecognizer(doc_bytes)

    def _call_provider(self, fn, *args, **kwargs):
        """Retry transient provider failures: exponential backoff with
        jitter so concurrent workers don't retry in lockstep."""
        delay = RETRY_BACKOFF_S
        for attempt in range(PROVIDER_RETRIES):
            try:
                return fn(*args, **kwargs)
            except ProviderUnavailable:
                if attempt == PROVIDER_RETRIES - 1:
                    raise
                time.sleep(delay * (1.0 + 0.25 * random.random()))
                delay *= 2

    # -- bookkeeping ---------------------------------------------------------

    def _advance(self, doc_id: str, stage: Stage, stage_hook=None) -> None:
        with self._ckpt_lock:
            self.checkpoint.advance(doc_id, stage)
            self.checkpoint.save(self._ckpt_path)
        if stage_hook is not None:
            stage_hook(doc_id, stage)

    def _doc_dir(self, doc_id: str) -> Path:
        return self.work / doc_id

    def _throttle(self) -> None:
        if self.config.provider_throttle_ms > 0:
            time.sleep(self.config.provider_throttle_ms / 1000.0)

    # -- select ---------------------------------------------------------

    def run_select(self, stage_hook=None) -> list[dict]:
        policy = corpus.SelectionPolicy(
            self.config.max_pages, self.config.min_first_page_images
        )
        entries = scan_corpus(self.config.input)
        decisions: list[dict] = []
        seen: set[str] = set()
        for uri, path in entries:
            data = path.read_bytes()
            doc_id = corpus.dedup_key(data)
            if doc_id in seen:
                decision = corpus.mark_duplicate(doc_id)
            else:
                seen.add(doc_id)
                known_stage = self.checkpoint.stage_of(doc_id)
                if known_stage is not None:
                    decision = corpus.SelectionDecision(doc_id, True, None, 0)
                elif doc_id in self.checkpoint.rejected:
                    decision = corpus.SelectionDecision(
                        doc_id,
                        False,
                        corpus.RejectionReason(self.checkpoint.rejected[doc_id]),
                    )
                else:
                    probe = corpus.probe_pdf(data, uri)
                    decision = corpus.select(probe, policy)
                    if decision.accepted:
                        doc_dir = self._doc_dir(doc_id)
                        doc_dir.mkdir(parents=True, exist_ok=True)
                        tmp = doc_dir / "doc.pdf.tmp"
                        tmp.write_bytes(data)
                        tmp.replace(doc_dir / "doc.pdf")
                        write_json(
                            doc_dir / "docmeta.json", {"doc_id": doc_id, "source_uri": uri}
                        )
                        self._advance(doc_id, Stage.SELECTED, stage_hook)
                    else:
                        with self._ckpt_lock:
                            self.checkpoint.rejected[doc_id] = decision.rejection_reason.value
                            self.checkpoint.save(self._ckpt_path)
            decisions.append(
                {
                    "doc_id": decision.doc_id,
                    "source_uri": uri,
                    "accepted": decision.accepted,
                    "rejection_reason": (
                        decision.rejection_reason.value if decision.rejection_reason else None
                    ),
                }
            )
        self._scanned_count = len(entries)
        write_ndjson(self.logs / "selection.ndjson", decisions)
        return decisions

    # -- per-document stages ---------------------------------------------------

    def _doc_extract(self, doc_id: str) -> None:
        cfg = self.config
        doc_dir = self._doc_dir(doc_id)
        data = (doc_dir / "doc.pdf").read_bytes()
        page = page_extract.rasterize(data, 0, cfg.dpi, doc_dir / "page0.png", doc_id)
        regions = page_extract.analyze_layout(page, self._layout_for(data))
        text_regions = [r for r in regions if r.kind is page_extract.RegionKind.TEXT]
        image_regions = [r for r in regions if r.kind is page_extract.RegionKind.IMAGE]
        raw_blocks = page_extract.recognize_text(page, text_regions, self._recognizer_for(data))
        blocks = page_extract.clean_text(raw_blocks, cfg.min_chars, cfg.min_script_ratio)
        crops, dropped = page_extract.crop_images(
            page, image_regions, doc_dir / "crops", cfg.jpeg_quality
        )
        order_by_region = {r.region_id: r.reading_order_index for r in regions}
        write_ndjson(
            doc_dir / "regions.ndjson",
            [
                {
                    "region_id": r.region_id,
                    "kind": r.kind.value,
                    "bbox": list(r.bbox),
                    "confidence": r.confidence,
                    "reading_order_index": r.reading_order_index,
                }
                for r in regions
            ],
        )
        write_ndjson(
            doc_dir / "texts.ndjson",
            [
                {
                    "region_id": b.region_id,
                    "content": b.content,
                    "recognizer_confidence": b.recognizer_confidence,
                    "target_script_ratio": b.target_script_ratio,
                    "reading_order_index": order_by_region[b.region_id],
                }
                for b in blocks
            ],
        )
        write_ndjson(
            doc_dir / "crops.ndjson",
            [
                {
                    "region_id": c.region_id,
                    "file": c.crop.name,
                    "width_px": c.width_px,
                    "height_px": c.height_px,
                    "reading_order_index": order_by_region[c.region_id],
                }
                for c in crops
            ],
        )
        write_json(
            doc_dir / "extract_stats.json",
            {
                "regions_total": len(regions),
                "image_regions": len(image_regions),
                "text_regions": len(text_regions),
                "crops_kept": len(crops),
                "crops_dropped_small": dropped,
                "text_blocks_raw": len(raw_blocks),
                "text_blocks_cleaned": len(blocks),
            },
        )

    def _doc_pair(self, doc_id: str) -> None:
        doc_dir = self._doc_dir(doc_id)
        crops = read_ndjson(doc_dir / "crops.ndjson")
        texts = sorted(
            read_ndjson(doc_dir / "texts.ndjson"), key=lambda t: t["reading_order_index"]
        )
        strategy = self.config.strategy
        candidates = []
        for t in texts:
            block = page_extract.TextBlock(
                t["region_id"], t["content"], t["recognizer_confidence"], t["target_script_ratio"]
            )
            emb = pairing.embed(t["content"], pairing.Modality.TEXT, self.embedder)
            candidates.append((block, emb, t["reading_order_index"]))
        records = []
        for crop in sorted(crops, key=lambda c: c["reading_order_index"]):
            crop_path = doc_dir / "crops" / crop["file"]
            image_emb = self._call_provider(
                pairing.embed, crop_path, pairing.Modality.IMAGE, self.embedder
            )
            paired_texts = []
            if candidates:
                sample = pairing.pair(
                    image_emb, [(b, e) for b, e, _ in candidates], strategy
                )
                for pt in sample.texts:
                    paired_texts.append(
                        {
                            "content": pt.block.content,
                            "similarity": pt.similarity,
                            "reading_order_index": candidates[pt.candidate_index][2],
                        }
                    )
            records.append(
                {
                    "doc_id": doc_id,
                    "image_region_id": crop["region_id"],
                    "image_asset": crop["file"],
                    "strategy": strategy.label(),
                    "texts": paired_texts,
                }
            )
        write_ndjson(doc_dir / "pairs.ndjson", records)

    def _doc_screen(self, doc_id: str) -> None:
        doc_dir = self._doc_dir(doc_id)
        pairs = read_ndjson(doc_dir / "pairs.ndjson")
        records = []
        self._throttle()
        for pair_rec in pairs:
            text = "\n".join(t["content"] for t in pair_rec["texts"])
            verdict = safety.rule_screen(text, self.rules)
            if not verdict.flagged:
                verdict = self._call_provider(
                    safety.model_screen_with_retry,
                    doc_dir / "crops" / pair_rec["image_asset"],
                    text,
                    self.generator,
                )
            records.append(
                {
                    "image_region_id": pair_rec["image_region_id"],
                    "image_asset": pair_rec["image_asset"],
                    "nsfw": verdict.nsfw,
                    "pii": verdict.pii,
                    "reasons": list(verdict.reasons),
                    "source": verdict.source.value,
                    "screened_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                }
            )
        write_ndjson(doc_dir / "screen.ndjson", records)

    def _doc_generate(self, doc_id: str) -> None:
        cfg = self.config
        doc_dir = self._doc_dir(doc_id)
        pairs = {p["image_region_id"]: p for p in read_ndjson(doc_dir / "pairs.ndjson")}
        screens = {s["image_region_id"]: s for s in read_ndjson(doc_dir / "screen.ndjson")}
        crops = sorted(
            read_ndjson(doc_dir / "crops.ndjson"), key=lambda c: c["reading_order_index"]
        )
        records = []
        audit_records = []
        dropped_malformed = 0
        self._throttle()
        for crop in crops:
            region_id = crop["region_id"]
            screen = screens.get(region_id)
            if screen is None or screen["nsfw"] or screen["pii"]:
                continue
            crop_path = doc_dir / "crops" / crop["file"]
            mode = cfg.mode
            context: str | None = None
            pdf_style_text = None
            over_length = None
            if cfg.generate_pdf_style or mode is textgen.ContextMode.IMAGE_PLUS_PDF_STYLE_TEXT:
                started = time.monotonic()
                generated = self._call_provider(
                    textgen.gen_pdf_style, crop_path, self.generator
                )
                pdf_style_text = generated.text
                over_length = generated.over_length
                audit_records.append(
                    {
                        "doc_id": doc_id,
                        "image_region_id": region_id,
                        "kind": "pdf_style",
                        "prompt_sha256": generated.prompt_sha256,
                        "provider_id": self.generator.provider_id,
                        "latency_ms": round(1000 * (time.monotonic() - started), 2),
                        "retries": 0,
                    }
                )
            if mode is textgen.ContextMode.IMAGE_PLUS_PAIRED_TEXT:
                paired = pairs.get(region_id, {}).get("texts", [])
                context = "\n".join(t["content"] for t in paired) or None
                if context is None:
                    mode = textgen.ContextMode.IMAGE_ONLY  # no usable paired text
            elif mode is textgen.ContextMode.IMAGE_PLUS_PDF_STYLE_TEXT:
                context = pdf_style_text
            audit: dict = {}
            started = time.monotonic()
            try:
                conv = self._call_provider(
                    textgen.gen_instructions, crop_path, context, mode, self.generator,
                    audit=audit,
                )
            except MalformedConversation:
                dropped_malformed += 1
                conv = None
            audit_records.append(
                {
                    "doc_id": doc_id,
                    "image_region_id": region_id,
                    "kind": "instruction",
                    "prompt_sha256": audit.get("prompt_sha256"),
                    "provider_id": self.generator.provider_id,
                    "latency_ms": round(1000 * (time.monotonic() - started), 2),
                    "retries": audit.get("attempts", 1) - 1,
                }
            )
            if conv is None:
                continue
            sample_id = f"{doc_id}_p0_r{crop['reading_order_index']}_0"
            records.append(
                {
                    "sample_id": sample_id,
                    "image_region_id": region_id,
                    "image_asset": crop["file"],
                    "turns": [[speaker.value, text] for speaker, text in conv.turns],
                    "provenance": mode.value,
                    "generator_id": self.generator.provider_id,
                    "pdf_style_text": pdf_style_text,
                    "pdf_style_over_length": over_length,
                }
            )
        write_ndjson(doc_dir / "conv.ndjson", records)
        write_ndjson(doc_dir / "audit.ndjson", audit_records)
        if dropped_malformed:
            write_json(
                doc_dir / "generate_stats.json", {"dropped_malformed": dropped_malformed}
            )

    # -- document driver ---------------------------------------------------

    _DOC_STAGES = (
        (Stage.EXTRACTED, "_doc_extract"),
        (Stage.PAIRED, "_doc_pair"),
        (Stage.SCREENED, "_doc_screen"),
        (Stage.GENERATED, "_doc_generate"),
    )

    def _drive_doc(self, doc_id: str, target: Stage, stage_hook=None) -> None:
        current = self.checkpoint.stage_of(doc_id) or Stage.SELECTED
        for stage, method in self._DOC_STAGES:
            if stage > target:
                break
            if current >= stage:
                continue
            try:
                getattr(self, method)(doc_id)
            except Exception as exc:
                raise StageFatal(doc_id, stage.name.capitalize(), str(exc)) from exc
            self._advance(doc_id, stage, stage_hook)
            current = stage

    # -- export and reports ---------------------------------------------------

    def _export(self, stage_hook=None) -> Path:
        dataset_dir = self.out / "dataset"
        images_dir = dataset_dir / "images"
        images_dir.mkdir(parents=True, exist_ok=True)
        samples: list[textgen.InstructionSample] = []
        doc_ids = sorted(
            d for d, s in self.checkpoint.docs.items() if s >= Stage.GENERATED
        )
        for doc_id in doc_ids:
            doc_dir = self._doc_dir(doc_id)
            for record in read_ndjson(doc_dir / "conv.ndjson"):
                src = doc_dir / "crops" / record["image_asset"]
                dst = images_dir / record["image_asset"]
                if not dst.exists():
                    tmp = dst.with_suffix(dst.suffix + ".tmp")
                    shutil.copyfile(src, tmp)
                    tmp.replace(dst)
                conv = textgen.Conversation(
                    tuple(
                        (textgen.Speaker(speaker), text) for speaker, text in record["turns"]
                    )
                )
                samples.append(
                    textgen.InstructionSample(
                        record["sample_id"],
                        dst,
                        conv,
                        textgen.ContextMode(record["provenance"]),
                        record["generator_id"],
                    )
                )
        manifest = dataset.export_dataset(samples, dataset_dir / "data.json")
        for doc_id in doc_ids:
            self._advance(doc_id, Stage.EXPORTED, stage_hook)
        return manifest.path

    def collect_stage_counts(self) -> dict:
        selection_log = self.logs / "selection.ndjson"
        scanned = getattr(self, "_scanned_count", None)
        if scanned is None:
            scanned = len(read_ndjson(selection_log)) if selection_log.exists() else 0
        counts = {
            "pdfs_scanned": scanned,
            "pdfs_selected": 0,
            "pages_processed": 0,
            "images_extracted": 0,
            "images_size_filtered": 0,
            "pairs_emitted": 0,
            "samples_quarantined": 0,
            "instructions_emitted": 0,
            "text_blocks_excluded": 0,
            "pdfs_with_instructions": 0,
            "pdf_style_over_length": 0,
        }
        for doc_id, stage in sorted(self.checkpoint.docs.items()):
            counts["pdfs_selected"] += 1
            doc_dir = self._doc_dir(doc_id)
            if stage >= Stage.EXTRACTED:
                counts["pages_processed"] += 1
                try:
                    es = json.loads(
                        (doc_dir / "extract_stats.json").read_text(encoding="utf-8")
                    )
                except (OSError, json.JSONDecodeError) as exc:
                    raise MissingStageLog(
                        f"extract stats unreadable for {doc_id}: {exc}"
                    ) from exc
                counts["images_extracted"] += es["crops_kept"]
                counts["images_size_filtered"] += es["crops_dropped_small"]
                counts["text_blocks_excluded"] += (
                    es["text_blocks_raw"] - es["text_blocks_cleaned"]
                )
            if stage >= Stage.PAIRED and (doc_dir / "pairs.ndjson").exists():
                counts["pairs_emitted"] += sum(
                    1 for p in read_ndjson(doc_dir / "pairs.ndjson") if p["texts"]
                )
            if stage >= Stage.SCREENED and (doc_dir / "screen.ndjson").exists():
                counts["samples_quarantined"] += sum(
                    1 for s in read_ndjson(doc_dir / "screen.ndjson") if s["nsfw"] or s["pii"]
                )
            if stage >= Stage.GENERATED and (doc_dir / "conv.ndjson").exists():
                convs = read_ndjson(doc_dir / "conv.ndjson")
                counts["instructions_emitted"] += len(convs)
                counts["pdfs_with_instructions"] += 1 if convs else 0
                counts["pdf_style_over_length"] += sum(
                    1 for c in convs if c.get("pdf_style_over_length")
                )
        return counts

    def write_reports(self) -> dataset.CorpusStats:
        counts = self.collect_stage_counts()
        extras = {
            k: counts[k]
            for k in ("text_blocks_excluded", "pdfs_with_instructions", "pdf_style_over_length")
        }
        stats = dataset.compute_stats(counts)
        report.write_stats_report(stats, self.out / "reports", extras)
        quarantine = []
        audit = []
        for doc_id in sorted(self.checkpoint.docs):
            doc_dir = self._doc_dir(doc_id)
            screen_path = doc_dir / "screen.ndjson"
            if screen_path.exists():
                for record in read_ndjson(screen_path):
                    if record["nsfw"] or record["pii"]:
                        quarantine.append(
                            {
                                "doc_id": doc_id,
                                "asset": record["image_asset"],
                                "reasons": record["reasons"],
                                "source": record["source"],
                                "timestamp": record["screened_at"],
                            }
                        )
            audit_path = doc_dir / "audit.ndjson"
            if audit_path.exists():
                audit.extend(read_ndjson(audit_path))
        write_ndjson(self.logs / "quarantine.ndjson", quarantine)
        write_ndjson(self.logs / "generation_audit.ndjson", audit)
        return stats

    # -- top-level entry points ---------------------------------------------------

    def run_to(self, target: Stage, stage_hook=None) -> RunManifest:
        self.run_select(stage_hook)
        doc_ids = sorted(self.checkpoint.docs)
        if target >= Stage.EXTRACTED and doc_ids:
            def drive(doc_id: str):
                try:
                    self._drive_doc(doc_id, min(target, Stage.GENERATED), stage_hook)
                except StageFatal as exc:
                    with self._fail_lock:
                        self.failed.append(
                            {"doc_id": exc.doc_id, "stage": exc.stage, "error": str(exc)}
                        )

            if self.config.workers == 1:
                for doc_id in doc_ids:
                    drive(doc_id)
            else:
                with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                    list(pool.map(drive, doc_ids))
        dataset_path = None
        stats = None
        if target >= Stage.EXPORTED:
            dataset_path = self._export(stage_hook)
            stats = self.write_reports()
        manifest = RunManifest(
            run_id=self.checkpoint.run_id,
            config_hash=self.checkpoint.config_hash,
            stage_counts=self.collect_stage_counts(),
            failed_docs=sorted(self.failed, key=lambda f: f["doc_id"]),
            dataset_path=dataset_path,
            stats=stats,
        )
        self._write_manifest(manifest)
        return manifest

    def run(self, stage_hook=None) -> RunManifest:
        return self.run_to(Stage.EXPORTED, stage_hook)

    def _write_manifest(self, manifest: RunManifest) -> None:
        prompt_hashes = config_prompt_hashes()
        write_json(
            self.out / "manifest.json",
            {
                "run_id": manifest.run_id,
                "config_hash": manifest.config_hash,
                "config": {
                    **self.config.canonical(),
                    "workers": self.config.workers,
                    "provider_throttle_ms": self.config.provider_throttle_ms,
                },
                "prompt_hashes": prompt_hashes,
                "stage_counts": manifest.stage_counts,
                "failed_docs": manifest.failed_docs,
                "dataset": str(manifest.dataset_path) if manifest.dataset_path else None,
            },
        )

    def close(self) -> None:
        for client in getattr(self, "_clients", {}).values():
            client.close()


def run_pipeline(config: RunConfig, stage_hook=None) -> RunManifest:
    """Full pipeline over a corpus; see RunConfig for the knobs."""
    pipe = Pipeline(config)
    try:
        return pipe.run(stage_hook)
    finally:
        pipe.close()


def resume(config: RunConfig, stage_hook=None) -> RunManifest:
    """Continue an interrupted run from its checkpoint. The config must
    hash identically to the one that started the run."""
    pipe = Pipeline(config, resume=True)
    try:
        return pipe.run(stage_hook)
    finally:
        pipe.close()

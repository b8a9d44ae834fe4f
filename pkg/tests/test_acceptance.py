"""Acceptance suite: every criterion as one test, each printing its own
pass/fail line in the terminal summary.

Run with: pytest tests/test_acceptance.py -v
"""

from __future__ import annotations

import json
import math
import os
import random
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest
from conftest import (
    JP_SENTENCES,
    PageSpec,
    build_pdf,
    register_acceptance,
    simple_doc,
)
from PIL import Image

from pdfharvest.checkpoint import Checkpoint, Stage
from pdfharvest.config import RunConfig
from pdfharvest.corpus import SelectionPolicy, dedup_key, probe_pdf, select
from pdfharvest.dataset import JudgeRow, aggregate_judge_scores
from pdfharvest.errors import InvalidOutputJson, MalformedConversation
from pdfharvest.pairing import PairingStrategy, select_pairs
from pdfharvest.pipeline import Pipeline, read_ndjson, resume, run_pipeline
from pdfharvest.textgen import parse_conversation, render_conversation, translate_samples
from test_pairing import brute_cosine, brute_neighbor, brute_top1, brute_topk
from test_textgen import EchoTranslator, random_conversation

pytestmark = pytest.mark.acceptance


def _tree_bytes(root: Path) -> dict:
    out = {}
    for pattern in ("dataset/**/*", "reports/stats.json"):
        for path in sorted(root.glob(pattern)):
            if path.is_file():
                out[str(path.relative_to(root))] = path.read_bytes()
    return out


register_acceptance(
    "test_selection_policy_on_fixture_corpus",
    "selection policy: 15/30 fixture docs accepted with labeled reasons in < 10 s",
)


def test_selection_policy_on_fixture_corpus(fixture_corpus):
    started = time.monotonic()
    policy = SelectionPolicy(max_pages=5, min_first_page_images=1)
    accepted = 0
    for path in sorted(fixture_corpus.glob("*.pdf")):
        decision = select(probe_pdf(path.read_bytes(), path.name), policy)
        label = path.name.split("_")[0]
        if label == "valid":
            assert decision.accepted, f"{path.name} should be accepted"
            accepted += 1
        elif label == "overlong":
            assert decision.rejection_reason is not None
            assert decision.rejection_reason.value == "TooManyPages", path.name
        elif label == "noimage":
            assert decision.rejection_reason is not None
            assert decision.rejection_reason.value == "NoImages", path.name
    elapsed = time.monotonic() - started
    assert accepted == 15
    assert elapsed < 10.0, f"selection took {elapsed:.1f}s"


register_acceptance(
    "test_size_filter_boundary_and_corpus_wide",
    "size filter: {40x300, 50x50, 300x40, 120x120} exports exactly 50x50 and 120x120; no exported crop < 50 px",
)


def test_size_filter_boundary_and_corpus_wide(tmp_path, fixture_corpus):
    # region-level fixture, through the crop operation itself
    from pdfharvest.page_extract import PageImage, Region, RegionKind, crop_images

    page_path = tmp_path / "page.png"
    Image.new("RGB", (700, 700), (90, 90, 200)).save(page_path)
    page = PageImage("doc", 0, 700, 700, 150, page_path)
    spec = [(40, 300), (50, 50), (300, 40), (120, 120)]
    regions = [
        Region(f"r{i}", RegionKind.IMAGE, (10 * i, 350 * (i % 2), 10 * i + w, 350 * (i % 2) + h), 1.0, i)
        for i, (w, h) in enumerate(spec)
    ]
    kept, dropped = crop_images(page, regions, tmp_path / "crops")
    assert sorted((c.width_px, c.height_px) for c in kept) == [(50, 50), (120, 120)]
    assert dropped == 2

    # the same boundary via a real PDF: point sizes chosen to land on
    # exact pixel counts at 150 dpi (px = pt * 25/12)
    pt = lambda px: px * 72 / 150
    data = build_pdf(
        [
            PageSpec(
                size=(600, 600),
                images=[
                    (pt(50), pt(50), pt(40), pt(300)),
                    (pt(150), pt(50), pt(50), pt(50)),
                    (pt(250), pt(400), pt(300), pt(40)),
                    (pt(250), pt(100), pt(120), pt(120)),
                ],
            )
        ]
    )
    corpus_dir = tmp_path / "one"
    corpus_dir.mkdir()
    (corpus_dir / "boundary.pdf").write_bytes(data)
    out = tmp_path / "one_out"
    run_pipeline(RunConfig(input=str(corpus_dir), out=str(out)))
    crop_sizes = []
    for crop in (out / "dataset/images").glob("*.jpg"):
        with Image.open(crop) as img:
            crop_sizes.append(img.size)
    assert sorted(crop_sizes) == [(50, 50), (120, 120)]

    # corpus-wide invariant on the 30-document fixture run
    out30 = tmp_path / "corpus_out"
    run_pipeline(RunConfig(input=str(fixture_corpus), out=str(out30)))
    for crop in (out30 / "dataset/images").glob("*.jpg"):
        with Image.open(crop) as img:
            assert min(img.size) >= 50, f"{crop.name} is {img.size}"


register_acceptance(
    "test_pairing_against_brute_force_oracle",
    "pairing oracle: 1000 random instances match brute force exactly; argmax scale-invariant",
)


def test_pairing_against_brute_force_oracle():
    rng = random.Random(987654321)
    for trial in range(1000):
        n = rng.randrange(2, 31)
        dim = rng.randrange(8, 129)
        image = [rng.gauss(0, 1) for _ in range(dim)]
        cands = [[rng.gauss(0, 1) for _ in range(dim)] for _ in range(n)]
        scores = [brute_cosine(image, c) for c in cands]
        k = rng.choice([1, 3, 5])
        assert select_pairs(scores, PairingStrategy.top1()) == brute_top1(scores)
        assert select_pairs(scores, PairingStrategy.top_k(k)) == brute_topk(scores, k)
        assert select_pairs(scores, PairingStrategy.neighbor()) == brute_neighbor(scores)
        factor = rng.uniform(1e-4, 1e4)
        scaled = [s * factor for s in scores]
        for strategy in (
            PairingStrategy.top1(),
            PairingStrategy.top_k(k),
            PairingStrategy.neighbor(),
        ):
            assert select_pairs(scaled, strategy) == select_pairs(scores, strategy)


register_acceptance(
    "test_conversation_grammar_round_trip_and_mutations",
    "conversation grammar: 500 round-trips identical; 50 mutations all rejected",
)


def test_conversation_grammar_round_trip_and_mutations():
    rng = random.Random(31337)
    for _ in range(500):
        conv = random_conversation(rng)
        assert parse_conversation(render_conversation(conv)) == conv
    rejected = 0
    for i in range(50):
        raw = render_conversation(random_conversation(rng))
        kind = i % 4
        if kind == 0:
            mutated = raw.replace("質問:", "質疑:", 1)  # corrupted prefix
        elif kind == 1:
            mutated = raw.replace("回答:", "答え:", 1)  # unknown prefix
        elif kind == 2:
            mutated = raw.replace("\n\n", "\n", 1)  # separator dropped
        else:
            mutated = raw.replace("\n\n", " ", 1)  # separator dropped
        with pytest.raises(MalformedConversation):
            parse_conversation(mutated)
        rejected += 1
    assert rejected == 50


register_acceptance(
    "test_translation_contract_on_100_records",
    "translation contract: <image> counts preserved on 100 records; altered structure rejected",
)


def test_translation_contract_on_100_records():
    rng = random.Random(55)
    records = []
    for i in range(100):
        tokens = "<image>\n" if i % 2 == 0 else ""
        extra = "<image>" * rng.randrange(0, 3)
        records.append(
            {
                "from": "human" if i % 2 == 0 else "gpt",
                "value": f"{tokens}Hello number {i} {extra}",
            }
        )
    out = translate_samples(records, EchoTranslator())
    assert len(out) == 100
    for src, dst in zip(records, out):
        assert src["value"].count("<image>") == dst["value"].count("<image>")
        assert src["from"] == dst["from"]

    class StructureBreaker:
        provider_id = "mock"

        def generate(self, prompt, image=None):
            payload = prompt[prompt.rfind("\n\n"):].strip()
            parsed = json.loads(payload)
            return json.dumps(parsed[:-1])  # drops a record

    with pytest.raises(InvalidOutputJson):
        translate_samples(records, StructureBreaker())

    class ProseReplier:
        provider_id = "mock"

        def generate(self, prompt, image=None):
            return "翻訳結果は以下のとおりです。"

    with pytest.raises(InvalidOutputJson):
        translate_samples(records, ProseReplier())


register_acceptance(
    "test_judge_aggregation_reference_values",
    "judge aggregation: 80.0 and 110.0 within 1e-9; permutation- and scale-invariant",
)


def test_judge_aggregation_reference_values():
    rows80 = [
        JudgeRow("q1", "detail", 3.0, 5.0),
        JudgeRow("q2", "detail", 5.0, 5.0),
    ]  # model mean 4.0, reference mean 5.0
    table = aggregate_judge_scores(rows80)
    assert abs(table.per_category["detail"].model_mean - 4.0) < 1e-9
    assert abs(table.per_category["detail"].reference_mean - 5.0) < 1e-9
    assert abs(table.per_category["detail"].ratio_pct - 80.0) < 1e-9
    assert abs(table.overall_ratio_pct - 80.0) < 1e-9

    rows110 = [JudgeRow("q1", "conv", 5.5, 5.0)]
    assert abs(aggregate_judge_scores(rows110).overall_ratio_pct - 110.0) < 1e-9

    rng = random.Random(4)
    rows = [
        JudgeRow(f"q{i}", rng.choice("abc"), rng.uniform(1, 9), rng.uniform(1, 9))
        for i in range(40)
    ]
    shuffled = list(rows)
    rng.shuffle(shuffled)
    base = aggregate_judge_scores(rows)
    assert abs(aggregate_judge_scores(shuffled).overall_ratio_pct - base.overall_ratio_pct) < 1e-9
    scaled = [JudgeRow(r.question_id, r.category, r.model_score * 7.5, r.reference_score * 7.5) for r in rows]
    scaled_table = aggregate_judge_scores(scaled)
    assert abs(scaled_table.overall_ratio_pct - base.overall_ratio_pct) < 1e-6
    for cat in base.per_category:
        assert (
            abs(scaled_table.per_category[cat].ratio_pct - base.per_category[cat].ratio_pct)
            < 1e-6
        )


register_acceptance(
    "test_full_run_deterministic_and_kill_resume",
    "determinism & resume: two runs byte-identical; SIGKILLed run resumes to the identical dataset",
)


def test_full_run_deterministic_and_kill_resume(fixture_corpus, tmp_path):
    config_a = RunConfig(input=str(fixture_corpus), out=str(tmp_path / "a"))
    config_b = RunConfig(input=str(fixture_corpus), out=str(tmp_path / "b"))
    assert run_pipeline(config_a).ok
    assert run_pipeline(config_b).ok
    tree_a = _tree_bytes(tmp_path / "a")
    assert tree_a and tree_a == _tree_bytes(tmp_path / "b")

    # kill a slowed-down run mid-corpus with SIGKILL, then resume
    out = tmp_path / "killed"
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "input": str(fixture_corpus),
                "out": str(out),
                "workers": 2,
                "provider_throttle_ms": 150,
            }
        )
    )
    proc = subprocess.Popen(
        [sys.executable, "-m", "pdfharvest.cli", "run", "--config", str(config_path)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    ckpt_path = out / "checkpoint.json"
    deadline = time.monotonic() + 60
    killed = False
    while time.monotonic() < deadline:
        if ckpt_path.exists():
            try:
                ckpt = Checkpoint.load(ckpt_path)
            except Exception:
                time.sleep(0.02)
                continue
            advanced = [s for s in ckpt.docs.values() if s >= Stage.EXTRACTED]
            if len(advanced) >= 3:
                os.kill(proc.pid, signal.SIGKILL)
                killed = True
                break
        time.sleep(0.02)
    proc.wait(timeout=60)
    assert killed, "run finished before it could be killed; raise the throttle"
    assert not (out / "dataset/data.json").exists()

    manifest = resume(RunConfig(input=str(fixture_corpus), out=str(out)))
    assert manifest.ok
    assert _tree_bytes(out) == tree_a


register_acceptance(
    "test_stats_report_consistent_with_counts",
    "stats: instructions_per_pdf consistent with generated counts; reference 1.81 displayed",
)


def test_stats_report_consistent_with_counts(fixture_corpus, tmp_path):
    out = tmp_path / "out"
    manifest = run_pipeline(RunConfig(input=str(fixture_corpus), out=str(out)))
    stats = json.loads((out / "reports/stats.json").read_text(encoding="utf-8"))
    data = json.loads((out / "dataset/data.json").read_text(encoding="utf-8"))
    assert stats["instructions_emitted"] == len(data)
    assert stats["pdfs_selected"] == 15
    ckpt = Checkpoint.load(out / "checkpoint.json")
    assert sum(1 for s in ckpt.docs.values() if s >= Stage.EXPORTED) == 15
    expected_ratio = len(data) / 15
    assert math.isclose(stats["instructions_per_pdf"], expected_ratio, rel_tol=1e-12)
    assert stats["reference_instructions_per_pdf"] == 1.81
    assert "1.81" in (out / "reports/summary.txt").read_text(encoding="utf-8")
    assert (
        stats["images_extracted"] + stats["images_size_filtered"]
        == manifest.stage_counts["images_extracted"] + manifest.stage_counts["images_size_filtered"]
    )


register_acceptance(
    "test_throughput_1000_docs_under_5_minutes",
    "throughput: 1000 small PDFs through select+extract+pair in < 5 min",
)


def test_throughput_1000_docs_under_5_minutes(tmp_path_factory):
    corpus = tmp_path_factory.mktemp("corpus1000")
    base_pages = [
        PageSpec(
            size=(250, 300),
            images=[(30, 120, 60, 60)],
            texts=[(30, 80, JP_SENTENCES[0], 10)],
        )
    ]
    for i in range(1000):
        # vary the image seed so every document has distinct content
        data = build_pdf(base_pages, image_seed=i)
        (corpus / f"doc_{i:04d}.pdf").write_bytes(data)
    out = tmp_path_factory.mktemp("out1000")
    config = RunConfig(input=str(corpus), out=str(out), workers=4)
    started = time.monotonic()
    pipe = Pipeline(config)
    try:
        pipe.run_to(Stage.PAIRED)
    finally:
        pipe.close()
    elapsed = time.monotonic() - started
    paired = sum(1 for s in pipe.checkpoint.docs.values() if s >= Stage.PAIRED)
    assert paired == 1000
    pairs = read_ndjson(out / "work" / sorted(pipe.checkpoint.docs)[0] / "pairs.ndjson")
    assert pairs and pairs[0]["texts"]
    assert elapsed < 300.0, f"select+extract+pair took {elapsed:.0f}s"

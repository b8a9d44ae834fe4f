from __future__ import annotations

import unicodedata

import pytest
from conftest import PageSpec, build_pdf, simple_doc
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from pdfharvest.errors import InvalidDpi, RegionOutOfBounds, RenderFailure
from pdfharvest.page_extract import (
    MIN_CROP_PX,
    PageImage,
    RawRegion,
    Region,
    RegionKind,
    TextBlock,
    analyze_layout,
    assign_reading_order,
    bbox_iou,
    builtin_layout,
    clean_text,
    crop_images,
    rasterize,
    recognize_text,
    target_script_ratio,
)
from pdfharvest.providers import RecognizedText


class StubLayout:
    provider_id = "stub"

    def __init__(self, regions):
        self._regions = regions

    def analyze_page(self, page):
        return self._regions


class StubRecognizer:
    provider_id = "stub"

    def __init__(self, mapping):
        self._mapping = mapping

    def recognize(self, page, regions):
        return [self._mapping.get(r.region_id, RecognizedText("", 0.0)) for r in regions]


A4_PT = (595.2756, 841.8898)


class TestRasterize:
    def test_a4_at_150dpi_size(self, tmp_path):
        # oracle: 210x297 mm at 150 dpi / 25.4 mm-per-inch
        expected_w = round(210 / 25.4 * 150)
        expected_h = round(297 / 25.4 * 150)
        data = build_pdf([PageSpec(size=A4_PT)])
        page = rasterize(data, 0, 150, tmp_path / "p.png", "doc")
        assert abs(page.width_px - expected_w) <= 1
        assert abs(page.height_px - expected_h) <= 1

    def test_zero_dpi_rejected(self, tmp_path):
        with pytest.raises(InvalidDpi):
            rasterize(simple_doc(), 0, 0, tmp_path / "p.png")

    def test_deterministic_pixels(self, tmp_path):
        data = simple_doc(first_page_images=2, texts=["ラベル", "more text"])
        a = rasterize(data, 0, 120, tmp_path / "a.png", "d")
        b = rasterize(data, 0, 120, tmp_path / "b.png", "d")
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
        assert (a.width_px, a.height_px) == (b.width_px, b.height_px)

    def test_bad_page_index(self, tmp_path):
        with pytest.raises(RenderFailure):
            rasterize(simple_doc(n_pages=1), 3, 100, tmp_path / "p.png")

    def test_garbage_bytes(self, tmp_path):
        with pytest.raises(RenderFailure):
            rasterize(b"\x00\x01\x02", 0, 100, tmp_path / "p.png")


def _page(tmp_path, w=800, h=600) -> PageImage:
    path = tmp_path / "page.png"
    Image.new("RGB", (w, h), (255, 255, 255)).save(path)
    return PageImage("doc", 0, w, h, 150, path)


class TestAnalyzeLayout:
    def test_mock_passthrough_two_boxes(self, tmp_path):
        page = _page(tmp_path)
        provider = StubLayout(
            [
                RawRegion(RegionKind.IMAGE, (10, 10, 110, 110), 0.9),
                RawRegion(RegionKind.TEXT, (10, 200, 110, 260), 0.8),
            ]
        )
        regions = analyze_layout(page, provider)
        assert [r.reading_order_index for r in regions] == [0, 1]
        assert regions[0].kind is RegionKind.IMAGE
        assert regions[1].kind is RegionKind.TEXT

    def test_reading_order_y_then_x(self, tmp_path):
        # boxes at the same y: the smaller x comes first
        page = _page(tmp_path)
        provider = StubLayout(
            [
                RawRegion(RegionKind.TEXT, (200, 10, 300, 40)),
                RawRegion(RegionKind.TEXT, (20, 10, 120, 40)),
            ]
        )
        regions = analyze_layout(page, provider)
        first = min(regions, key=lambda r: r.reading_order_index)
        assert first.bbox[0] == 20

    def test_reading_order_matches_sort_oracle(self, tmp_path):
        import random

        rng = random.Random(3)
        boxes = []
        for _ in range(20):
            x0 = rng.randrange(0, 700)
            y0 = rng.randrange(0, 500)
            boxes.append((x0, y0, x0 + 50, y0 + 30))
        oracle = sorted(range(len(boxes)), key=lambda i: (boxes[i][1], boxes[i][0]))
        got = assign_reading_order(list(boxes))
        for rank, i in enumerate(oracle):
            assert got[i] == rank

    def test_empty_reply(self, tmp_path):
        assert analyze_layout(_page(tmp_path), StubLayout([])) == []

    def test_clipping_to_page(self, tmp_path):
        page = _page(tmp_path, 400, 300)
        provider = StubLayout([RawRegion(RegionKind.IMAGE, (-50, -20, 500, 200), 1.0)])
        (region,) = analyze_layout(page, provider)
        assert region.bbox == (0, 0, 400, 200)

    def test_high_iou_same_kind_merged(self, tmp_path):
        page = _page(tmp_path)
        provider = StubLayout(
            [
                RawRegion(RegionKind.IMAGE, (10, 10, 210, 210), 0.5),
                RawRegion(RegionKind.IMAGE, (12, 12, 210, 210), 0.9),
                RawRegion(RegionKind.TEXT, (10, 10, 210, 210), 0.7),
            ]
        )
        regions = analyze_layout(page, provider)
        kinds = sorted(r.kind for r in regions)
        assert len(regions) == 2  # two images merged; text kept separate
        (image,) = [r for r in regions if r.kind is RegionKind.IMAGE]
        assert image.confidence == 0.9
        assert image.bbox == (10, 10, 210, 210)

    def test_iou_oracle(self):
        # hand-computed: 50x50 overlap of two 100x100 boxes
        a = (0, 0, 100, 100)
        b = (50, 50, 150, 150)
        assert bbox_iou(a, b) == pytest.approx(2500 / 17500)


class TestRecognizeText:
    def test_mock_passthrough(self, tmp_path):
        page = _page(tmp_path)
        region = Region("r0", RegionKind.TEXT, (10, 10, 200, 40), 1.0, 0)
        blocks = recognize_text(page, [region], StubRecognizer({"r0": RecognizedText("東京", 0.95)}))
        assert blocks[0].content == "東京"
        assert blocks[0].recognizer_confidence == 0.95

    def test_out_of_bounds_region(self, tmp_path):
        page = _page(tmp_path, 100, 100)
        region = Region("r0", RegionKind.TEXT, (50, 50, 150, 80), 1.0, 0)
        with pytest.raises(RegionOutOfBounds):
            recognize_text(page, [region], StubRecognizer({}))

    def test_empty_list(self, tmp_path):
        assert recognize_text(_page(tmp_path), [], StubRecognizer({})) == []

    def test_order_follows_reading_order(self, tmp_path):
        page = _page(tmp_path)
        regions = [
            Region("r1", RegionKind.TEXT, (10, 100, 100, 130), 1.0, 1),
            Region("r0", RegionKind.TEXT, (10, 10, 100, 40), 1.0, 0),
        ]
        mapping = {"r0": RecognizedText("first", 1.0), "r1": RecognizedText("second", 1.0)}
        blocks = recognize_text(page, regions, StubRecognizer(mapping))
        assert [b.content for b in blocks] == ["first", "second"]


class TestCropImages:
    def _region(self, idx, x0, y0, w, h):
        return Region(f"r{idx}", RegionKind.IMAGE, (x0, y0, x0 + w, y0 + h), 1.0, idx)

    def test_size_filter_matrix(self, tmp_path):
        page_path = tmp_path / "page.png"
        Image.new("RGB", (600, 600), (200, 10, 10)).save(page_path)
        page = PageImage("doc", 0, 600, 600, 150, page_path)
        regions = [
            self._region(0, 0, 0, 40, 300),     # too narrow
            self._region(1, 100, 0, 50, 50),     # boundary: kept
            self._region(2, 200, 0, 300, 40),    # too short
            self._region(3, 0, 350, 120, 120),   # kept
        ]
        kept, dropped = crop_images(page, regions, tmp_path / "crops")
        assert dropped == 2
        sizes = sorted((c.width_px, c.height_px) for c in kept)
        assert sizes == [(50, 50), (120, 120)]
        for crop in kept:
            assert min(crop.width_px, crop.height_px) >= MIN_CROP_PX
            with Image.open(crop.crop) as img:
                assert img.size == (crop.width_px, crop.height_px)

    def test_crop_matches_region_dimensions(self, tmp_path):
        page = _page(tmp_path, 400, 400)
        (crop,), _ = crop_images(page, [self._region(0, 30, 40, 100, 200)], tmp_path / "c")
        assert (crop.width_px, crop.height_px) == (100, 200)

    def test_filenames_follow_contract(self, tmp_path):
        page = _page(tmp_path, 400, 400)
        (crop,), _ = crop_images(page, [self._region(5, 0, 0, 80, 80)], tmp_path / "c")
        assert crop.crop.name == "doc_p0_r5.jpg"


def _independent_ratio(text: str) -> float:
    """Character-class oracle built on unicodedata names."""
    total = 0
    hits = 0
    for ch in text:
        if ch.isspace():
            continue
        total += 1
        name = unicodedata.name(ch, "")
        is_kana = "HIRAGANA" in name or "KATAKANA" in name
        is_kanji = "CJK UNIFIED IDEOGRAPH" in name
        is_ascii_alnum = ch.isascii() and ch.isalnum()
        is_punct = ch in set("、。！？「」『』（）・ー〜：；％　") | set(
            "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~ "
        )
        if is_kana or is_kanji or is_ascii_alnum or is_punct:
            hits += 1
    return hits / total if total else 0.0


class TestCleanText:
    def _block(self, content):
        return TextBlock("r0", content, 1.0, target_script_ratio(content))

    def test_japanese_kept_with_defaults(self):
        blocks = clean_text([self._block("こんにちは世界")])
        assert len(blocks) == 1

    def test_devanagari_dropped_at_half_threshold(self):
        # 80% Devanagari / 20% ASCII by character class
        text = "नमस्ते दुनिया नमस्ते दुनिया ab"
        ratio = _independent_ratio(text)
        assert ratio < 0.5
        assert clean_text([self._block(text)]) == []

    def test_short_block_dropped(self):
        assert clean_text([self._block("あ")], min_chars=3) == []

    def test_ratio_matches_independent_counter(self):
        for text in ["こんにちは", "abc123", "東京タワー tower", "नमस्ते abc", "、、。！"]:
            assert target_script_ratio(text) == pytest.approx(_independent_ratio(text))

    def test_cjk_line_breaks_joined_without_space(self):
        blocks = clean_text([self._block("こんにち\nは世界です")])
        assert blocks[0].content == "こんにちは世界です"

    def test_ascii_line_breaks_joined_with_space(self):
        blocks = clean_text([self._block("hello\nworld line")])
        assert blocks[0].content == "hello world line"

    @given(
        st.lists(
            st.text(
                alphabet="あいう漢字abc ABC\n。、xyベ",
                min_size=0,
                max_size=40,
            ),
            max_size=5,
        )
    )
    def test_idempotent(self, contents):
        blocks = [TextBlock(f"r{i}", c, 1.0, target_script_ratio(c)) for i, c in enumerate(contents)]
        once = clean_text(blocks)
        twice = clean_text(once)
        assert [b.content for b in once] == [b.content for b in twice]


class TestBuiltinLayout:
    def test_image_region_geometry_scaled_by_dpi(self):
        # fixture: image at (30, 60) size 120x90 pt on a 400x400 pt page.
        # at 150 dpi, scale = 150/72; pixel bbox computed by hand:
        #   x0 = 30 * 150/72 = 62.5, y0 = (400-150) * 150/72 = 520.83,
        #   x1 = 150 * 150/72 = 312.5, y1 = (400-60) * 150/72 = 708.33
        data = build_pdf([PageSpec(size=(400, 400), images=[(30, 60, 120, 90)])])
        regions = builtin_layout(data, 0, 150)
        images = [r for r in regions if r.kind is RegionKind.IMAGE]
        assert len(images) == 1
        x0, y0, x1, y1 = images[0].bbox
        assert abs(x0 - 62.5) <= 1
        assert abs(y0 - 520.83) <= 1
        assert abs(x1 - 312.5) <= 1
        assert abs(y1 - 708.33) <= 1

    def test_text_only_fixture_yields_only_text_regions(self):
        data = build_pdf([PageSpec(size=(400, 400), texts=[(40, 300, "some words", 12)])])
        regions = builtin_layout(data, 0, 150)
        assert regions and all(r.kind is RegionKind.TEXT for r in regions)

    def test_image_only_fixture_yields_only_image_regions(self):
        data = build_pdf([PageSpec(size=(400, 400), images=[(10, 10, 100, 100)])])
        regions = builtin_layout(data, 0, 150)
        assert regions and all(r.kind is RegionKind.IMAGE for r in regions)

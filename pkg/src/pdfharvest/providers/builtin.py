"""Builtin providers: deterministic, model-free stand-ins.

Layout and recognition read the PDF's own structure; embeddings are a
seeded feature hash; generation draws from fixed Japanese template
banks keyed by a content hash. Outputs are pure functions of their
inputs, which is what makes full pipeline runs reproducible.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from pathlib import Path

import numpy as np
from PIL import Image

from ..page_extract import builtin_layout, builtin_text_lines
from ..textgen import IMAGE_TOKEN
from . import RecognizedText

PROVIDER_ID = "builtin"


def _hash64(token: str, seed: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=str(seed).encode()
    ).digest()
    return int.from_bytes(digest, "big")


class BuiltinLayoutProvider:
    """Regions from the document's own image placements and text layer."""

    provider_id = PROVIDER_ID

    def __init__(self, doc: bytes):
        self._doc = doc

    def analyze_page(self, page):
        return builtin_layout(self._doc, page.page_index, page.dpi)


class BuiltinTextRecognizer:
    """Reads the text layer instead of recognizing pixels: every text
    line whose center falls inside the region contributes, top to
    bottom, with confidence 1.0."""

    provider_id = PROVIDER_ID

    def __init__(self, doc: bytes):
        self._doc = doc

    def recognize(self, page, regions):
        lines = builtin_text_lines(self._doc, page.page_index, page.dpi)
        results = []
        for region in regions:
            x0, y0, x1, y1 = region.bbox
            picked = []
            for text, (lx0, ly0, lx1, ly1) in lines:
                cx, cy = (lx0 + lx1) / 2, (ly0 + ly1) / 2
                if x0 <= cx <= x1 and y0 <= cy <= y1:
                    picked.append((ly0, lx0, text))
            picked.sort()
            results.append(RecognizedText("\n".join(t for _, _, t in picked), 1.0))
        return results


class BuiltinEmbedder:
    """Seeded feature-hash embedder.

    Text: bag of characters hashed into a signed fixed-dim vector.
    Images: 16x16 grayscale thumbnail, each cell hashed the same way.
    Both are L2-normalized, so text and image vectors share a space of
    the declared dimension (deterministic, not semantically meaningful
    beyond content sensitivity).
    """

    provider_id = PROVIDER_ID

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed

    def _accumulate(self, tokens) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        joined = []
        for token in tokens:
            joined.append(token)
            h = _hash64(token, self.seed)
            sign = 1.0 if (h >> 63) & 1 else -1.0
            vec[h % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # signed collisions cancelled out; fall back to a single slot
            vec[_hash64("||".join(joined), self.seed) % self.dim] = 1.0
            norm = 1.0
        return vec / norm

    def embed_text(self, text: str) -> np.ndarray:
        return self._accumulate(f"c:{ch}" for ch in text)

    def embed_image(self, path: Path) -> np.ndarray:
        with Image.open(path) as img:
            thumb = img.convert("L").resize((16, 16), Image.Resampling.BILINEAR)
        pixels = thumb.tobytes()
        return self._accumulate(f"p:{i}:{v // 16}" for i, v in enumerate(pixels))


_PDF_STYLE_BANK = [
    "本資料では、{topic}に関する最近の取り組みを紹介しています。",
    "{topic}の概要を図とあわせて示し、今後の展望についても触れています。",
    "ここでは{topic}についての基礎的な情報をまとめています。",
    "{topic}に関する調査の結果は、次節で詳しく述べられています。",
]

_TOPIC_BANK = [
    "地域の催し",
    "研究活動",
    "製品の特長",
    "自然観察",
    "安全への配慮",
    "文化財の保存",
]

_QA_BANK = [
    ("この画像には何が写っていますか？", "この画像には資料の図版が写っており、本文の内容を補足しています。"),
    ("画像の中で最も目立つ部分はどこですか？", "中央に配置された図が最も目立ち、周囲の説明文と対応しています。"),
    ("この画像はどのような資料の一部だと考えられますか？", "紙面の構成から、案内資料や報告書の一部だと考えられます。"),
    ("画像から読み取れる情報を教えてください。", "図版と周囲の文章の配置から、資料の要点を視覚的に伝える意図が読み取れます。"),
    ("この画像の用途は何だと考えられますか？", "本文の理解を助ける挿図として使われていると考えられます。"),
    ("画像の色合いはどのような印象を与えますか？", "落ち着いた色合いで、資料全体の雰囲気に調和しています。"),
]

_TRANSLATION_BANK = [
    "これは画像に関する説明文です。",
    "この文は日本語に翻訳されています。",
    "画像の内容を述べた一文です。",
]

_ENGLISH_RUN = re.compile(r"[A-Za-z][A-Za-z0-9 ,.'\"!?;:-]*")


class BuiltinGenerator:
    """Template-bank generator for offline runs.

    Dispatches on prompt markers (PDF-style / instruction / translate /
    safety screen) and derives all choices from a hash of the prompt
    and image bytes, so identical requests yield identical replies.
    """

    provider_id = PROVIDER_ID

    def __init__(self, qa_pairs: int = 3, seed: int = 0):
        self.qa_pairs = max(1, min(qa_pairs, len(_QA_BANK)))
        self.seed = seed
        self._markers = {
            "pdf_style": "Generate a passage that resembles text commonly found in PDF documents",
            "instruction": "Design a conversation between you and a person",
            "translate": "translate only the English text inside",
            "safety": "content-safety reviewer",
        }

    def _rng(self, prompt: str, image: Path | None) -> random.Random:
        h = hashlib.blake2b(key=str(self.seed).encode(), digest_size=8)
        h.update(prompt.encode("utf-8"))
        if image is not None:
            h.update(Path(image).read_bytes())
        return random.Random(int.from_bytes(h.digest(), "big"))

    def generate(self, prompt: str, image: Path | None = None) -> str:
        if self._markers["safety"] in prompt:
            return json.dumps({"nsfw": False, "pii": False, "reasons": []})
        if self._markers["translate"] in prompt:
            return self._translate(prompt)
        rng = self._rng(prompt, image)
        if self._markers["pdf_style"] in prompt:
            template = rng.choice(_PDF_STYLE_BANK)
            return template.format(topic=rng.choice(_TOPIC_BANK))
        if self._markers["instruction"] in prompt:
            pairs = rng.sample(_QA_BANK, self.qa_pairs)
            parts = []
            for question, answer in pairs:
                parts.append(f"質問: {question}")
                parts.append(f"回答: {answer}")
            return "\n\n".join(parts)
        # unknown prompt: echo a deterministic acknowledgement
        return "了解しました。"

    def _translate(self, prompt: str) -> str:
        payload = prompt[prompt.rfind("\n\n") :].strip()
        try:
            records = json.loads(payload)
        except json.JSONDecodeError:
            return "[]"
        out = []
        for record in records:
            value = record.get("value", "")
            translated = self._translate_value(value)
            out.append({"from": record.get("from", ""), "value": translated})
        return json.dumps(out, ensure_ascii=False)

    def _translate_value(self, value: str) -> str:
        # split out <image> tokens, translate English runs between them
        parts = value.split(IMAGE_TOKEN)
        translated = []
        for part in parts:
            def repl(match: re.Match) -> str:
                run = match.group(0)
                idx = _hash64(run, self.seed) % len(_TRANSLATION_BANK)
                return _TRANSLATION_BANK[idx]

            translated.append(_ENGLISH_RUN.sub(repl, part))
        return IMAGE_TOKEN.join(translated)

"""Reference model implementations behind the provider protocol.

Each class fills one capability slot (layout, ocr, embed, llm) with a
deterministic, dependency-free stand-in. Deployments swap in real
models by registering objects with the same call signatures; the
protocol layer doesn't care what runs underneath.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import random
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image


class ModelError(Exception):
    """Raised for inputs a model cannot process (mapped to ModelFailure)."""


def decode_image(b64: str) -> Image.Image:
    try:
        data = base64.b64decode(b64, validate=True)
        img = Image.open(io.BytesIO(data))
        img.load()
        return img.convert("RGB")
    except Exception as exc:
        raise ModelError(f"cannot decode image payload: {exc}") from exc


@dataclass
class DetectedRegion:
    kind: str
    bbox: tuple[float, float, float, float]
    confidence: float


class LayoutModel:
    """Connected-component layout detector.

    Finds non-background components on a downsampled page and labels
    low-variance gray blocks as text, everything else as images. Meant
    as a stand-in with the right output shape, not a trained detector.
    """

    TARGET_WIDTH = 240
    BACKGROUND_LUMA = 245

    def analyze(self, image: Image.Image) -> list[DetectedRegion]:
        w, h = image.size
        scale = max(1, w // self.TARGET_WIDTH)
        small = image.resize((max(1, w // scale), max(1, h // scale)), Image.Resampling.BILINEAR)
        arr = np.asarray(small, dtype=np.int16)
        luma = arr.mean(axis=2)
        mask = luma < self.BACKGROUND_LUMA
        labels = self._components(mask)
        regions: list[DetectedRegion] = []
        for component in labels:
            ys, xs = component
            x0, x1 = xs.min(), xs.max() + 1
            y0, y1 = ys.min(), ys.max() + 1
            if (x1 - x0) * (y1 - y0) < 4:
                continue
            patch = arr[y0:y1, x0:x1]
            channel_spread = float(np.ptp(patch.mean(axis=(0, 1))))
            pixel_std = float(patch.std())
            is_text = pixel_std < 10.0 and channel_spread < 4.0
            regions.append(
                DetectedRegion(
                    "TextRegion" if is_text else "ImageRegion",
                    (
                        float(x0 * scale),
                        float(y0 * scale),
                        float(min(x1 * scale, w)),
                        float(min(y1 * scale, h)),
                    ),
                    0.8 if is_text else 0.9,
                )
            )
        return regions

    @staticmethod
    def _components(mask: np.ndarray):
        """4-connected components as (ys, xs) index arrays."""
        visited = np.zeros_like(mask, dtype=bool)
        h, w = mask.shape
        out = []
        for sy in range(h):
            for sx in range(w):
                if not mask[sy, sx] or visited[sy, sx]:
                    continue
                stack = [(sy, sx)]
                visited[sy, sx] = True
                ys, xs = [], []
                while stack:
                    y, x = stack.pop()
                    ys.append(y)
                    xs.append(x)
                    for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not visited[ny, nx]:
                            visited[ny, nx] = True
                            stack.append((ny, nx))
                out.append((np.array(ys), np.array(xs)))
        return out


class OcrModel:
    """Recognizer slot. The reference implementation reads nothing from
    pixels (there is no trained recognizer here) and reports empty text
    with zero confidence per region — the correct degenerate output,
    with the correct shape, for glyph-free inputs."""

    def recognize(self, image: Image.Image, boxes: list) -> list[dict]:
        results = []
        for box in boxes:
            if not (isinstance(box, (list, tuple)) and len(box) == 4):
                raise ModelError(f"bad region bbox: {box!r}")
            results.append({"text": "", "confidence": 0.0})
        return results


class EmbedModel:
    """Seeded feature-hash embedder with a shared text/image space."""

    def __init__(self, dim: int = 128, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def _hash(self, token: str) -> int:
        digest = hashlib.blake2b(
            token.encode("utf-8"), digest_size=8, key=f"sidecar:{self.seed}".encode()
        ).digest()
        return int.from_bytes(digest, "big")

    def _accumulate(self, tokens) -> list[float]:
        vec = np.zeros(self.dim, dtype=np.float64)
        any_token = False
        for token in tokens:
            any_token = True
            h = self._hash(token)
            vec[h % self.dim] += 1.0 if (h >> 63) & 1 else -1.0
        if not any_token:
            raise ModelError("empty input")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).tolist()

    def embed_text(self, text: str) -> list[float]:
        if not isinstance(text, str) or not text:
            raise ModelError("embed.text requires non-empty text")
        return self._accumulate(f"t:{a}{b}" for a, b in zip(text, text[1:] + "\x00"))

    def embed_image(self, image: Image.Image) -> list[float]:
        thumb = image.convert("L").resize((16, 16), Image.Resampling.BILINEAR)
        return self._accumulate(f"i:{i}:{v // 16}" for i, v in enumerate(thumb.tobytes()))


_QA_BANK = [
    ("この画像の主な内容は何ですか？", "ページ中央に図版が配置されており、資料の主題を視覚的に示しています。"),
    ("画像の周囲には何がありますか？", "周囲には説明のための文章が並んでおり、図版を補足しています。"),
    ("この資料はどんな種類のものと考えられますか？", "構成から、案内や報告の類の資料と考えられます。"),
    ("画像から何が読み取れますか？", "配置と色使いから、要点を簡潔に伝える意図が読み取れます。"),
    ("この画像が伝えたいことは何だと思いますか？", "本文の内容を一目で把握できるようにすることだと考えられます。"),
]

_PDF_STYLE_BANK = [
    "本節では関連する取り組みを図とともに紹介します。",
    "詳細な手順については、次の章で説明します。",
    "この資料は地域の活動内容をまとめたものです。",
]

_ENGLISH_RUN = re.compile(r"[A-Za-z][A-Za-z0-9 ,.'\"!?;:-]*")


class LlmModel:
    """Multimodal-generation slot: deterministic template replies keyed
    by a content hash, shaped for the pipeline's four prompt families
    (safety JSON, translation JSON, PDF-style prose, 質問/回答 turns)."""

    def __init__(self, seed: int = 0, qa_pairs: int = 3):
        self.seed = seed
        self.qa_pairs = max(1, min(qa_pairs, len(_QA_BANK)))

    def _rng(self, prompt: str, image_b64: str | None) -> random.Random:
        h = hashlib.blake2b(key=f"llm:{self.seed}".encode(), digest_size=8)
        h.update(prompt.encode("utf-8"))
        if image_b64:
            h.update(image_b64.encode("ascii"))
        return random.Random(int.from_bytes(h.digest(), "big"))

    def generate(self, prompt: str, image_b64: str | None = None) -> str:
        if not isinstance(prompt, str) or not prompt:
            raise ModelError("llm.generate requires a prompt")
        if "content-safety reviewer" in prompt:
            return json.dumps({"nsfw": False, "pii": False, "reasons": []})
        if "translate only the English text inside" in prompt:
            return self._translate(prompt)
        rng = self._rng(prompt, image_b64)
        if "resembles text commonly found in PDF documents" in prompt:
            return rng.choice(_PDF_STYLE_BANK)
        if "Design a conversation between you and a person" in prompt:
            parts = []
            for question, answer in rng.sample(_QA_BANK, self.qa_pairs):
                parts.append(f"質問: {question}")
                parts.append(f"回答: {answer}")
            return "\n\n".join(parts)
        return "了解しました。"

    def _translate(self, prompt: str) -> str:
        payload = prompt[prompt.rfind("\n\n"):].strip()
        try:
            records = json.loads(payload)
        except json.JSONDecodeError:
            return "[]"
        out = []
        for record in records:
            value = str(record.get("value", ""))
            parts = value.split("<image>")
            translated = "<image>".join(
                _ENGLISH_RUN.sub("翻訳済みの文", part) for part in parts
            )
            out.append({"from": record.get("from", ""), "value": translated})
        return json.dumps(out, ensure_ascii=False)

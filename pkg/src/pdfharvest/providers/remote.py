"""Clients for the model sidecar: newline-delimited JSON over TCP.

One JSON object per line in each direction; responses correlate by id
and may arrive out of order. An Overloaded error is surfaced as
ProviderUnavailable after cooperative backoff (halved in-flight budget
is the sidecar's concern; the client simply waits and retries once).
"""

from __future__ import annotations

import base64
import io
import json
import socket
import threading
import time
from pathlib import Path

from ..errors import ProviderMalformedReply, ProviderUnavailable
from ..page_extract import RawRegion, RegionKind
from . import RecognizedText

DEFAULT_TIMEOUT_S = 30.0


def _encode_image(path: Path) -> str:
    data = Path(path).read_bytes()
    return base64.b64encode(data).decode("ascii")


class SidecarClient:
    """Line-framed JSON request/response channel with id correlation."""

    def __init__(self, address: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        host, _, port = address.rpartition(":")
        if not host or not port.isdigit():
            raise ProviderUnavailable(f"bad sidecar address {address!r}")
        self.address = (host, int(port))
        self.timeout_s = timeout_s
        self._lock = threading.Lock()
        self._sock: socket.socket | None = None
        self._reader: io.BufferedReader | None = None
        self._next_id = 0
        self._pending: dict[str, dict] = {}

    def _connect(self) -> None:
        if self._sock is not None:
            return
        try:
            sock = socket.create_connection(self.address, timeout=self.timeout_s)
        except OSError as exc:
            raise ProviderUnavailable(f"cannot reach sidecar at {self.address}: {exc}") from exc
        self._sock = sock
        self._reader = sock.makefile("rb")

    def close(self) -> None:
        with self._lock:
            if self._sock is not None:
                try:
                    self._sock.close()
                finally:
                    self._sock = None
                    self._reader = None

    def call(self, method: str, params: dict) -> dict:
        backoff = 0.5
        for attempt in range(2):
            try:
                return self._call_once(method, params)
            except ProviderUnavailable:
                if attempt == 1:
                    raise
                self.close()
                time.sleep(backoff)
        raise ProviderUnavailable("unreachable")  # not reached

    def _call_once(self, method: str, params: dict) -> dict:
        with self._lock:
            self._connect()
            self._next_id += 1
            req_id = str(self._next_id)
            line = json.dumps({"id": req_id, "method": method, "params": params}) + "\n"
            try:
                self._sock.sendall(line.encode("utf-8"))
                while True:
                    if req_id in self._pending:
                        reply = self._pending.pop(req_id)
                        break
                    raw = self._reader.readline()
                    if not raw:
                        raise ProviderUnavailable("sidecar closed the connection")
                    try:
                        msg = json.loads(raw)
                    except json.JSONDecodeError as exc:
                        raise ProviderMalformedReply(f"unparseable reply line: {exc}") from exc
                    msg_id = str(msg.get("id"))
                    if msg_id == req_id:
                        reply = msg
                        break
                    self._pending[msg_id] = msg
            except (OSError, socket.timeout) as exc:
                self.close()
                raise ProviderUnavailable(f"sidecar i/o failed: {exc}") from exc
        if "error" in reply and reply["error"] is not None:
            error = reply["error"]
            code = error.get("code") if isinstance(error, dict) else str(error)
            if code == "Overloaded":
                raise ProviderUnavailable("sidecar overloaded")
            raise ProviderMalformedReply(f"sidecar error: {error}")
        result = reply.get("result")
        if not isinstance(result, dict):
            raise ProviderMalformedReply("reply has neither result nor error")
        return result

    def health(self) -> dict:
        return self.call("health", {})


class RemoteLayoutProvider:
    def __init__(self, client: SidecarClient):
        self.client = client
        self.provider_id = f"sidecar@{client.address[0]}:{client.address[1]}"

    def analyze_page(self, page):
        result = self.client.call(
            "layout.analyze", {"image": _encode_image(page.pixels), "dpi": page.dpi}
        )
        regions = result.get("regions")
        if not isinstance(regions, list):
            raise ProviderMalformedReply("layout.analyze reply lacks regions")
        out = []
        for item in regions:
            try:
                kind = RegionKind(item["kind"])
                bbox = tuple(float(v) for v in item["bbox"])
                conf = float(item.get("confidence", 1.0))
            except (KeyError, TypeError, ValueError) as exc:
                raise ProviderMalformedReply(f"bad region in reply: {item!r}") from exc
            out.append(RawRegion(kind, bbox, conf))
        return out


class RemoteTextRecognizer:
    def __init__(self, client: SidecarClient):
        self.client = client
        self.provider_id = f"sidecar@{client.address[0]}:{client.address[1]}"

    def recognize(self, page, regions):
        result = self.client.call(
            "ocr.recognize",
            {
                "image": _encode_image(page.pixels),
                "regions": [{"bbox": list(r.bbox)} for r in regions],
            },
        )
        texts = result.get("texts")
        if not isinstance(texts, list) or len(texts) != len(regions):
            raise ProviderMalformedReply("ocr.recognize reply has wrong shape")
        out = []
        for item in texts:
            try:
                out.append(RecognizedText(str(item["text"]), float(item.get("confidence", 1.0))))
            except (KeyError, TypeError) as exc:
                raise ProviderMalformedReply(f"bad text entry: {item!r}") from exc
        return out


class RemoteEmbedder:
    def __init__(self, client: SidecarClient):
        self.client = client
        self.provider_id = f"sidecar@{client.address[0]}:{client.address[1]}"
        self._dim: int | None = None

    @property
    def dim(self) -> int:
        if self._dim is None:
            health = self.client.health()
            dim = health.get("embedding_dim")
            if not isinstance(dim, int):
                raise ProviderMalformedReply("sidecar health lacks embedding_dim")
            self._dim = dim
        return self._dim

    def _unpack(self, result: dict):
        vector = result.get("vector")
        dim = result.get("dim")
        if not isinstance(vector, list) or not isinstance(dim, int) or len(vector) != dim:
            raise ProviderMalformedReply("embed reply vector/dim mismatch")
        self._dim = dim
        return [float(v) for v in vector]

    def embed_text(self, text: str):
        return self._unpack(self.client.call("embed.text", {"text": text}))

    def embed_image(self, path: Path):
        return self._unpack(self.client.call("embed.image", {"image": _encode_image(path)}))


class RemoteGenerator:
    def __init__(self, client: SidecarClient):
        self.client = client
        self.provider_id = f"sidecar@{client.address[0]}:{client.address[1]}"

    def generate(self, prompt: str, image: Path | None = None) -> str:
        params: dict = {"prompt": prompt}
        if image is not None:
            params["image"] = _encode_image(image)
        result = self.client.call("llm.generate", params)
        text = result.get("text")
        if not isinstance(text, str):
            raise ProviderMalformedReply("llm.generate reply lacks text")
        return text

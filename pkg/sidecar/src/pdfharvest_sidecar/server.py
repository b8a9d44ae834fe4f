"""TCP server speaking the provider protocol: one JSON object per line
in each direction, responses correlated by request id.

Every parseable request gets exactly one response carrying either
result or error (codes: BadRequest, ModelFailure, Overloaded).
Unparseable lines are answered with id null and BadRequest; the
connection stays open either way.
"""

from __future__ import annotations

import json
import socketserver
import threading
import time
from dataclasses import dataclass, field

from .models import EmbedModel, LayoutModel, LlmModel, ModelError, OcrModel, decode_image

ALL_CAPABILITIES = ("layout", "ocr", "embed", "llm")


@dataclass
class SidecarConfig:
    host: str = "127.0.0.1"
    port: int = 0
    models: tuple[str, ...] = ALL_CAPABILITIES
    embedding_dim: int = 128
    seed: int = 0
    qa_pairs: int = 3
    max_inflight: int = 32
    debug_methods: bool = False
    log_stream: object = field(default=None, repr=False)


def _error(req_id, code: str, message: str) -> dict:
    return {"id": req_id, "error": {"code": code, "message": message}}


def _result(req_id, payload: dict) -> dict:
    return {"id": req_id, "result": payload}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: SidecarServer = self.server  # type: ignore[assignment]
        while True:
            try:
                line = self.rfile.readline()
            except (ConnectionError, OSError):
                return
            if not line:
                return
            if not line.strip():
                continue
            reply = server.handle_line(line)
            try:
                self.wfile.write((json.dumps(reply, ensure_ascii=False) + "\n").encode("utf-8"))
                self.wfile.flush()
            except (ConnectionError, OSError):
                return


class SidecarServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: SidecarConfig | None = None):
        self.config = config or SidecarConfig()
        self._inflight = threading.BoundedSemaphore(self.config.max_inflight)
        caps = self.config.models
        self.layout = LayoutModel() if "layout" in caps else None
        self.ocr = OcrModel() if "ocr" in caps else None
        self.embed = (
            EmbedModel(self.config.embedding_dim, self.config.seed) if "embed" in caps else None
        )
        self.llm = (
            LlmModel(self.config.seed, self.config.qa_pairs) if "llm" in caps else None
        )
        super().__init__((self.config.host, self.config.port), _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]

    @property
    def address(self) -> str:
        return f"{self.server_address[0]}:{self.server_address[1]}"

    def _log(self, **fields) -> None:
        stream = self.config.log_stream
        if stream is not None:
            stream.write(json.dumps(fields, ensure_ascii=False) + "\n")
            stream.flush()

    # -- request handling ---------------------------------------------------

    def handle_line(self, line: bytes) -> dict:
        started = time.monotonic()
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            self._log(event="bad_line", error=str(exc))
            return _error(None, "BadRequest", f"line is not valid JSON: {exc}")
        if not isinstance(request, dict):
            return _error(None, "BadRequest", "request must be a JSON object")
        req_id = request.get("id")
        if not isinstance(req_id, str) or not req_id:
            return _error(None, "BadRequest", "request id must be a non-empty string")
        method = request.get("method")
        params = request.get("params", {})
        if not isinstance(params, dict):
            return _error(req_id, "BadRequest", "params must be an object")
        acquired = self._inflight.acquire(blocking=False)
        if not acquired:
            return _error(req_id, "Overloaded", "too many in-flight requests; halve your rate")
        try:
            reply = self._dispatch(req_id, method, params)
        except ModelError as exc:
            reply = _error(req_id, "ModelFailure", str(exc))
        except Exception as exc:  # never kill the connection on a bug
            reply = _error(req_id, "ModelFailure", f"internal error: {exc}")
        finally:
            self._inflight.release()
        self._log(
            event="request",
            id=req_id,
            method=method,
            ok="result" in reply,
            ms=round(1000 * (time.monotonic() - started), 2),
        )
        return reply

    def _dispatch(self, req_id: str, method, params: dict) -> dict:
        if method == "health":
            payload = {"ok": True, "models": list(self.config.models)}
            if self.embed is not None:
                payload["embedding_dim"] = self.embed.dim
            return _result(req_id, payload)
        if method == "layout.analyze":
            if self.layout is None:
                return _error(req_id, "BadRequest", "layout capability not loaded")
            if "image" not in params:
                return _error(req_id, "BadRequest", "layout.analyze requires image")
            image = decode_image(params["image"])
            regions = self.layout.analyze(image)
            return _result(
                req_id,
                {
                    "regions": [
                        {"kind": r.kind, "bbox": list(r.bbox), "confidence": r.confidence}
                        for r in regions
                    ]
                },
            )
        if method == "ocr.recognize":
            if self.ocr is None:
                return _error(req_id, "BadRequest", "ocr capability not loaded")
            if "image" not in params or "regions" not in params:
                return _error(req_id, "BadRequest", "ocr.recognize requires image and regions")
            image = decode_image(params["image"])
            boxes = [r.get("bbox") if isinstance(r, dict) else None for r in params["regions"]]
            return _result(req_id, {"texts": self.ocr.recognize(image, boxes)})
        if method == "embed.text":
            if self.embed is None:
                return _error(req_id, "BadRequest", "embed capability not loaded")
            if "text" not in params:
                return _error(req_id, "BadRequest", "embed.text requires text")
            vector = self.embed.embed_text(params["text"])
            return _result(req_id, {"vector": vector, "dim": self.embed.dim})
        if method == "embed.image":
            if self.embed is None:
                return _error(req_id, "BadRequest", "embed capability not loaded")
            if "image" not in params:
                return _error(req_id, "BadRequest", "embed.image requires image")
            vector = self.embed.embed_image(decode_image(params["image"]))
            return _result(req_id, {"vector": vector, "dim": self.embed.dim})
        if method == "llm.generate":
            if self.llm is None:
                return _error(req_id, "BadRequest", "llm capability not loaded")
            if "prompt" not in params:
                return _error(req_id, "BadRequest", "llm.generate requires prompt")
            text = self.llm.generate(params["prompt"], params.get("image"))
            return _result(req_id, {"text": text})
        if method == "debug.sleep" and self.config.debug_methods:
            time.sleep(float(params.get("ms", 0)) / 1000.0)
            return _result(req_id, {"slept_ms": params.get("ms", 0)})
        return _error(req_id, "BadRequest", f"unknown method {method!r}")


def serve_background(config: SidecarConfig | None = None) -> SidecarServer:
    """Start a sidecar on a background thread; caller owns shutdown()."""
    server = SidecarServer(config)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server

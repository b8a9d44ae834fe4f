from __future__ import annotations

import json
import socket

import pytest

from pdfharvest_sidecar import SidecarConfig, serve_background


class LineClient:
    """Minimal test client: one JSON object per line over TCP."""

    def __init__(self, address: str):
        host, _, port = address.rpartition(":")
        self.sock = socket.create_connection((host, int(port)), timeout=10)
        self.reader = self.sock.makefile("rb")

    def send_line(self, line: str) -> None:
        self.sock.sendall(line.encode("utf-8") + b"\n")

    def recv(self) -> dict:
        raw = self.reader.readline()
        assert raw, "server closed the connection"
        return json.loads(raw)

    def call(self, method: str, params: dict, req_id: str = "1") -> dict:
        self.send_line(json.dumps({"id": req_id, "method": method, "params": params}))
        return self.recv()

    def close(self) -> None:
        self.sock.close()


@pytest.fixture(scope="module")
def server():
    srv = serve_background(SidecarConfig(port=0))
    yield srv
    srv.shutdown()


@pytest.fixture()
def client(server):
    c = LineClient(server.address)
    yield c
    c.close()

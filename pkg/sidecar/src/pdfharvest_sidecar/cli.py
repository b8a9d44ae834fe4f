"""Sidecar entry point."""

from __future__ import annotations

import argparse
import json
import sys

from .server import ALL_CAPABILITIES, SidecarConfig, SidecarServer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdfharvest-sidecar",
        description="Serve layout/ocr/embedding/generation models over the "
        "newline-delimited JSON provider protocol.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8750, help="0 picks an ephemeral port")
    parser.add_argument(
        "--models",
        default=",".join(ALL_CAPABILITIES),
        help="comma-separated capabilities to expose (layout,ocr,embed,llm)",
    )
    parser.add_argument("--dim", type=int, default=128, help="embedding dimension")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--qa-pairs", type=int, default=3)
    parser.add_argument("--max-inflight", type=int, default=32)
    parser.add_argument("--log", type=argparse.FileType("a"), default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    unknown = set(models) - set(ALL_CAPABILITIES) - {"debug"}
    if unknown:
        print(f"unknown capabilities: {', '.join(sorted(unknown))}", file=sys.stderr)
        return 1
    config = SidecarConfig(
        host=args.host,
        port=args.port,
        models=models,
        embedding_dim=args.dim,
        seed=args.seed,
        qa_pairs=args.qa_pairs,
        max_inflight=args.max_inflight,
        debug_methods="debug" in models,
        log_stream=args.log or sys.stdout,
    )
    server = SidecarServer(config)
    print(
        json.dumps({"event": "listening", "address": server.address, "models": list(models)}),
        flush=True,
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())

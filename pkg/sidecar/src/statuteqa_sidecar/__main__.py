"""Run the scoring service: python -m statuteqa_sidecar --pair-model <id-or-dir>"""

from __future__ import annotations

import argparse

import uvicorn

from statuteqa_sidecar.app import create_app
from statuteqa_sidecar.models import SidecarConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="statuteqa-sidecar")
    parser.add_argument("--pair-model", required=True, help="checkpoint id or directory")
    parser.add_argument("--span-model", help="defaults to --pair-model")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-length", type=int)
    parser.add_argument("--max-batch", type=int, default=64)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8500)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    config = SidecarConfig(
        pair_model=args.pair_model,
        span_model=args.span_model,
        device=args.device,
        max_length=args.max_length,
        max_batch=args.max_batch,
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, workers=args.workers)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

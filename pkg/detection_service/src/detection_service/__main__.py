"""Run the service: python -m detection_service [--model M] [--port P] ..."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import ServiceConfig


def main(argv: list[str] | None = None) -> int:
    defaults = ServiceConfig.from_env()
    parser = argparse.ArgumentParser(prog="detection-service")
    parser.add_argument("--model", default=defaults.model,
                        help="builtin-color or owlvit:<model-id>")
    parser.add_argument("--host", default=defaults.host)
    parser.add_argument("--port", type=int, default=defaults.port)
    parser.add_argument("--threshold", type=float, default=defaults.conf_threshold)
    parser.add_argument("--max-image-dim", type=int, default=defaults.max_image_dim)
    args = parser.parse_args(argv)
    config = ServiceConfig(
        model=args.model,
        conf_threshold=args.threshold,
        host=args.host,
        port=args.port,
        max_image_dim=args.max_image_dim,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

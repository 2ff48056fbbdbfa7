"""Service configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class ServiceConfig:
    """Which detector to serve and how.

    ``model`` selects the backend: ``builtin-color`` (the dependency-free
    color-prototype detector) or ``owlvit:<model-id>`` (a zero-shot
    transformer detector, loaded via the optional ``owlvit`` extra).
    """

    model: str = "builtin-color"
    conf_threshold: float = 0.25
    host: str = "127.0.0.1"
    port: int = 8765
    max_image_dim: int = 1280

    def __post_init__(self) -> None:
        if not 0.0 < self.conf_threshold < 1.0:
            raise ValueError(f"conf_threshold must be in (0, 1), got {self.conf_threshold}")
        if not 0 < self.port < 65536:
            raise ValueError(f"port {self.port} out of range")
        if self.max_image_dim < 64:
            raise ValueError("max_image_dim must be >= 64")

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        return cls(
            model=os.environ.get("DETECT_MODEL", "builtin-color"),
            conf_threshold=float(os.environ.get("DETECT_CONF_THRESHOLD", "0.25")),
            host=os.environ.get("DETECT_HOST", "127.0.0.1"),
            port=int(os.environ.get("DETECT_PORT", "8765")),
            max_image_dim=int(os.environ.get("DETECT_MAX_IMAGE_DIM", "1280")),
        )

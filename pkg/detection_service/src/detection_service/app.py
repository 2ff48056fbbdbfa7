"""The HTTP surface.

    POST /detect   {image: base64 RGB, labels: [string], conf_threshold: float}
                -> {detections: [{label, bbox: [x_min, y_min, x_max, y_max], confidence}]}
    GET  /health   -> {status: "ok"} once the model is loaded, 503 before

Boxes are always in the caller's pixel space: oversized images are
downscaled for inference and the boxes are scaled back. Labels are echoed
exactly as requested.
"""

from __future__ import annotations

import base64
import binascii
import io
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel

from .config import ServiceConfig
from .detectors import build_detector

__all__ = ["DetectRequest", "create_app"]


class DetectRequest(BaseModel):
    image: str
    labels: list[str]
    conf_threshold: float | None = None


def _decode_image(b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
        image = Image.open(io.BytesIO(raw)).convert("RGB")
    except (binascii.Error, OSError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"image does not decode: {exc}") from exc
    return np.asarray(image, dtype=np.uint8)


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()

    @asynccontextmanager
    async def load_model(app: FastAPI):
        app.state.detector = build_detector(config.model)
        yield

    app = FastAPI(title="detection-service", lifespan=load_model)
    app.state.config = config
    app.state.detector = None

    @app.get("/health")
    def health():
        if app.state.detector is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {"status": "ok"}

    @app.post("/detect")
    def handle_detect(request: DetectRequest):
        if app.state.detector is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        if not request.labels:
            raise HTTPException(status_code=400, detail="labels must be non-empty")
        image = _decode_image(request.image)
        threshold = (
            request.conf_threshold
            if request.conf_threshold is not None
            else config.conf_threshold
        )

        scale = 1.0
        largest = max(image.shape[0], image.shape[1])
        if largest > config.max_image_dim:
            scale = config.max_image_dim / largest
            resized = Image.fromarray(image).resize(
                (max(1, round(image.shape[1] * scale)), max(1, round(image.shape[0] * scale))),
                Image.BILINEAR,
            )
            image = np.asarray(resized, dtype=np.uint8)

        detections = app.state.detector.detect(image, list(request.labels), float(threshold))
        return {
            "detections": [
                {
                    "label": d.label,
                    "bbox": [v / scale for v in d.bbox],
                    "confidence": d.confidence,
                }
                for d in detections
            ]
        }

    return app

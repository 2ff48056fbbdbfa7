"""Detector backends behind one interface.

``detect(image, labels, threshold)`` takes an RGB uint8 array and the
caller's label strings and returns boxes in that image's pixel space,
each tagged with the requested label it matched.

``ColorPrototypeDetector`` is the built-in open-vocabulary fallback: it
segments foreground blobs against the border-estimated background and
scores each blob's mean color against a prototype derived from the label
text ("red_apple" and "apple" both resolve to the red prototype, so
synonymous names land on the same blob). It exists so the service runs
(and its contract tests pass) on machines that cannot fetch transformer
checkpoints; ``OwlVitDetector`` wraps a real zero-shot model when the
optional dependencies and weights are available.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "RawDetection",
    "DetectorUnavailableError",
    "ColorPrototypeDetector",
    "OwlVitDetector",
    "build_detector",
]


class DetectorUnavailableError(RuntimeError):
    """The selected backend cannot be constructed in this environment."""


@dataclass(frozen=True)
class RawDetection:
    label: str  # the caller's requested label, echoed
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max
    confidence: float


_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")

COLOR_PROTOTYPES: dict[str, tuple[int, int, int]] = {
    "red": (200, 40, 40),
    "crimson": (200, 40, 40),
    "green": (60, 150, 60),
    "blue": (50, 90, 200),
    "yellow": (230, 200, 40),
    "orange": (240, 140, 30),
    "purple": (140, 60, 160),
    "pink": (240, 150, 180),
    "white": (245, 245, 245),
    "black": (30, 30, 30),
    "brown": (120, 90, 50),
    "gray": (128, 128, 128),
    "grey": (128, 128, 128),
}

# everyday object words with a characteristic hue
OBJECT_COLOR_WORDS: dict[str, str] = {
    "apple": "red",
    "tomato": "red",
    "strawberry": "red",
    "orange": "orange",
    "tangerine": "orange",
    "carrot": "orange",
    "banana": "yellow",
    "lemon": "yellow",
    "kiwifruit": "brown",
    "kiwi": "brown",
    "lime": "green",
    "pear": "green",
    "cucumber": "green",
    "plate": "white",
    "plum": "purple",
    "eggplant": "purple",
    "grape": "purple",
}

_MAX_RGB_DISTANCE = float(np.linalg.norm([255.0, 255.0, 255.0]))


def _tokens(label: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(label.lower()) if t]


def prototype_for(label: str) -> tuple[int, int, int] | None:
    """Color prototype implied by the label text, or None."""
    for token in _tokens(label):
        if token in COLOR_PROTOTYPES:
            return COLOR_PROTOTYPES[token]
    for token in _tokens(label):
        color = OBJECT_COLOR_WORDS.get(token)
        if color:
            return COLOR_PROTOTYPES[color]
    return None


class ColorPrototypeDetector:
    """Blob segmentation plus label-to-color matching; fully deterministic."""

    def __init__(self, background_tolerance: float = 40.0, min_area_px: int = 25):
        self.background_tolerance = background_tolerance
        self.min_area_px = min_area_px

    def _blobs(self, image: np.ndarray) -> list[tuple[tuple[float, float, float, float], np.ndarray]]:
        pixels = image.astype(np.float64)
        border = np.concatenate(
            [pixels[0, :], pixels[-1, :], pixels[:, 0], pixels[:, -1]], axis=0
        )
        background = np.median(border, axis=0)
        distance = np.linalg.norm(pixels - background, axis=2)
        mask = distance > self.background_tolerance
        labeled, count = ndimage.label(mask)
        blobs = []
        for idx in range(1, count + 1):
            ys, xs = np.nonzero(labeled == idx)
            if xs.size < self.min_area_px:
                continue
            bbox = (float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))
            mean_color = pixels[ys, xs].mean(axis=0)
            blobs.append((bbox, mean_color))
        return blobs

    def detect(self, image: np.ndarray, labels: list[str], threshold: float) -> list[RawDetection]:
        blobs = self._blobs(image)
        out: list[RawDetection] = []
        for label in labels:
            prototype = prototype_for(label)
            if prototype is None:
                continue  # no color evidence for this word; the fallback stays silent
            proto = np.asarray(prototype, dtype=np.float64)
            for bbox, mean_color in blobs:
                confidence = 1.0 - float(np.linalg.norm(mean_color - proto)) / _MAX_RGB_DISTANCE
                confidence = min(max(confidence, 0.0), 1.0)
                if confidence >= threshold:
                    out.append(RawDetection(label, bbox, confidence))
        return out


class OwlVitDetector:
    """Zero-shot transformer detector; needs the ``owlvit`` extra and weights."""

    def __init__(self, model_id: str = "google/owlvit-base-patch32"):
        try:
            import torch  # noqa: F401
            from transformers import OwlViTForObjectDetection, OwlViTProcessor
        except ImportError as exc:
            raise DetectorUnavailableError(
                "owlvit backend needs the 'owlvit' extra (transformers + torch)"
            ) from exc
        try:
            self.processor = OwlViTProcessor.from_pretrained(model_id)
            self.model = OwlViTForObjectDetection.from_pretrained(model_id)
        except Exception as exc:
            raise DetectorUnavailableError(f"cannot load {model_id}: {exc}") from exc
        self.model.eval()

    def detect(self, image: np.ndarray, labels: list[str], threshold: float) -> list[RawDetection]:
        import torch
        from PIL import Image

        queries = [label.replace("_", " ") for label in labels]
        pil = Image.fromarray(image)
        inputs = self.processor(text=[queries], images=pil, return_tensors="pt")
        with torch.no_grad():
            outputs = self.model(**inputs)
        target_size = torch.tensor([[image.shape[0], image.shape[1]]])
        results = self.processor.post_process_object_detection(
            outputs, threshold=threshold, target_sizes=target_size
        )[0]
        out = []
        for score, idx, box in zip(results["scores"], results["labels"], results["boxes"]):
            x_min, y_min, x_max, y_max = (float(v) for v in box)
            out.append(
                RawDetection(labels[int(idx)], (x_min, y_min, x_max, y_max), float(score))
            )
        return out


def build_detector(model: str):
    if model == "builtin-color":
        return ColorPrototypeDetector()
    if model.startswith("owlvit:"):
        return OwlVitDetector(model.split(":", 1)[1])
    if model == "owlvit":
        return OwlVitDetector()
    raise DetectorUnavailableError(f"unknown model {model!r}")

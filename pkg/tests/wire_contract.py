"""Detection wire-contract checks, shared by the mock and any live service.

A backend under test is represented by two callables:

    post_json(path, body) -> (status_code, payload_dict)
    get_json(path)        -> (status_code, payload_dict)

``run_detect_contract`` drives the golden request files in tests/golden/
through the backend and asserts the contract: /health reports ok, labels
are echoed in the caller's requested form, boxes are sane, querying the
same object under synonymous labels ("apple" vs "red_apple") yields boxes
with IoU >= 0.5, and malformed requests are rejected with 400.
"""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path
from typing import Callable, Sequence

GOLDEN_DIR = Path(__file__).parent / "golden"

PostFn = Callable[[str, dict], tuple[int, dict]]
GetFn = Callable[[str], tuple[int, dict]]


def load_golden(name: str) -> dict:
    return json.loads((GOLDEN_DIR / name).read_text(encoding="utf-8"))


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _assert_response_shape(payload: dict, requested_labels: list[str]) -> list[dict]:
    assert "detections" in payload, f"response missing 'detections': {payload}"
    detections = payload["detections"]
    assert isinstance(detections, list)
    for det in detections:
        assert set(det) >= {"label", "bbox", "confidence"}, f"bad detection keys: {det}"
        assert det["label"] in requested_labels, f"label {det['label']!r} not echoed from request"
        x_min, y_min, x_max, y_max = det["bbox"]
        assert x_min < x_max and y_min < y_max, f"degenerate bbox {det['bbox']}"
        assert 0.0 <= det["confidence"] <= 1.0
    return detections


def _top_box(detections: list[dict], label: str) -> list[float]:
    matching = [d for d in detections if d["label"] == label]
    assert matching, f"no detection labeled {label!r}"
    return max(matching, key=lambda d: d["confidence"])["bbox"]


def run_detect_contract(post_json: PostFn, get_json: GetFn) -> None:
    status, payload = get_json("/health")
    assert status == 200 and payload.get("status") == "ok", f"health: {status} {payload}"

    apple_request = load_golden("detect_request_apple.json")
    status, payload = post_json("/detect", apple_request)
    assert status == 200, f"apple query: HTTP {status} {payload}"
    apple_dets = _assert_response_shape(payload, apple_request["labels"])
    assert apple_dets, "golden apple image produced no 'apple' detections"

    red_request = load_golden("detect_request_red_apple.json")
    status, payload = post_json("/detect", red_request)
    assert status == 200, f"red_apple query: HTTP {status} {payload}"
    red_dets = _assert_response_shape(payload, red_request["labels"])
    assert red_dets, "golden apple image produced no 'red_apple' detections"

    overlap = iou(_top_box(apple_dets, "apple"), _top_box(red_dets, "red_apple"))
    assert overlap >= 0.5, f"synonym queries disagree on the box: IoU {overlap:.3f}"

    status, _ = post_json("/detect", load_golden("detect_request_empty_labels.json"))
    assert status == 400, f"empty label list must be rejected, got {status}"

    status, _ = post_json("/detect", load_golden("detect_request_bad_image.json"))
    assert status == 400, f"undecodable image must be rejected, got {status}"


# ---------------------------------------------------------------------------
# Mock backend behind the same wire shape
# ---------------------------------------------------------------------------


def mock_wire_backend(scene) -> tuple[PostFn, GetFn]:
    """Serve the wire contract from a ground-truth scene via MockDetector."""
    from PIL import Image

    from gamevlm.dsl import normalize_label
    from gamevlm.perception import MockDetector

    detector = MockDetector.from_scene(scene)

    def post_json(path: str, body: dict) -> tuple[int, dict]:
        if path != "/detect":
            return 404, {}
        labels = body.get("labels") or []
        if not labels:
            return 400, {"error": "labels must be non-empty"}
        try:
            raw = base64.b64decode(body.get("image", ""), validate=True)
            Image.open(io.BytesIO(raw)).convert("RGB")
        except Exception:
            return 400, {"error": "image does not decode"}
        threshold = float(body.get("conf_threshold", 0.25))
        echo = {normalize_label(label): label for label in labels}
        detections = detector.detect(scene.objects, labels)
        return 200, {
            "detections": [
                {
                    "label": echo[d.label],
                    "bbox": [d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max],
                    "confidence": d.confidence,
                }
                for d in detections
                if d.confidence >= threshold
            ]
        }

    def get_json(path: str) -> tuple[int, dict]:
        if path != "/health":
            return 404, {}
        return 200, {"status": "ok"}

    return post_json, get_json

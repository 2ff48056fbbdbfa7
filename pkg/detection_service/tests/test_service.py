from __future__ import annotations

import base64
import io

import pytest
from fastapi.testclient import TestClient
from PIL import Image, ImageDraw

from detection_service import ServiceConfig, create_app
from wire_contract import load_golden, run_detect_contract


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(ServiceConfig())) as c:
        yield c


def png_bytes(image: Image.Image) -> str:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def scene_with_disc(size: tuple[int, int], box: tuple[int, int, int, int]) -> Image.Image:
    img = Image.new("RGB", size, (214, 196, 166))
    ImageDraw.Draw(img).ellipse(list(box), fill=(196, 30, 24))
    return img


# ---------------------------------------------------------------------------
# Wire contract (identical suite to the engine's mock backend)
# ---------------------------------------------------------------------------


def test_live_service_passes_wire_contract(client):
    def post_json(path: str, body: dict):
        response = client.post(path, json=body)
        return response.status_code, response.json()

    def get_json(path: str):
        response = client.get(path)
        return response.status_code, response.json()

    run_detect_contract(post_json, get_json)


def test_synonym_queries_overlap(client):
    apple = client.post("/detect", json=load_golden("detect_request_apple.json")).json()
    red = client.post("/detect", json=load_golden("detect_request_red_apple.json")).json()
    box_a = apple["detections"][0]["bbox"]
    box_r = red["detections"][0]["bbox"]
    from wire_contract import iou

    assert iou(box_a, box_r) >= 0.5


# ---------------------------------------------------------------------------
# Service semantics
# ---------------------------------------------------------------------------


def test_health_is_503_before_model_loads():
    app = create_app(ServiceConfig())
    bare = TestClient(app)  # no lifespan: the model never loads
    assert bare.get("/health").status_code == 503
    with TestClient(app) as started:
        assert started.get("/health").status_code == 200
        assert started.get("/health").json() == {"status": "ok"}  # idempotent
        assert started.get("/health").json() == {"status": "ok"}


def test_detect_before_load_is_503():
    app = create_app(ServiceConfig())
    bare = TestClient(app)
    request = load_golden("detect_request_apple.json")
    assert bare.post("/detect", json=request).status_code == 503


def test_empty_labels_rejected(client):
    request = dict(load_golden("detect_request_apple.json"))
    request["labels"] = []
    assert client.post("/detect", json=request).status_code == 400


def test_undecodable_image_rejected(client):
    request = dict(load_golden("detect_request_apple.json"))
    request["image"] = base64.b64encode(b"definitely not a png").decode()
    assert client.post("/detect", json=request).status_code == 400


def test_labels_echoed_in_requested_form(client):
    request = dict(load_golden("detect_request_apple.json"))
    request["labels"] = ["Red Apple", "apple"]
    payload = client.post("/detect", json=request).json()
    assert payload["detections"]
    for det in payload["detections"]:
        assert det["label"] in request["labels"]


def test_threshold_filters_detections(client):
    request = dict(load_golden("detect_request_apple.json"))
    request["conf_threshold"] = 0.99
    assert client.post("/detect", json=request).json()["detections"] == []


def test_boxes_rescaled_to_caller_space():
    config = ServiceConfig(max_image_dim=128)
    with TestClient(create_app(config)) as client:
        image = scene_with_disc((640, 480), (200, 150, 400, 330))
        body = {"image": png_bytes(image), "labels": ["apple"], "conf_threshold": 0.25}
        payload = client.post("/detect", json=body).json()
        assert payload["detections"]
        x_min, y_min, x_max, y_max = payload["detections"][0]["bbox"]
        # back in 640x480 coordinates despite 128px inference
        assert abs(x_min - 200) <= 8 and abs(x_max - 400) <= 8
        assert abs(y_min - 150) <= 8 and abs(y_max - 330) <= 8


def test_engine_remote_client_drops_in(client):
    """The planning engine's RemoteDetector client consumes this service."""
    from gamevlm.perception import RemoteDetector

    detector = RemoteDetector(
        "http://service",
        post=lambda url, body, timeout: _split(client.post(url.replace("http://service", ""), json=body)),
        get=lambda url, timeout: _split(client.get(url.replace("http://service", ""))),
    )
    assert detector.health()
    image = load_golden("detect_request_apple.json")["image"]
    import base64 as b64

    detections = detector.detect(b64.b64decode(image), ["apple"], 0.25)
    assert detections and detections[0].label == "apple"
    assert detections[0].bbox.area > 0


def _split(response):
    return response.status_code, response.json()


def test_multiple_blobs_multiple_labels(client):
    img = Image.new("RGB", (320, 240), (214, 196, 166))
    draw = ImageDraw.Draw(img)
    draw.ellipse([40, 60, 100, 120], fill=(196, 30, 24))     # red thing
    draw.ellipse([200, 120, 280, 200], fill=(235, 205, 45))  # yellow thing
    body = {"image": png_bytes(img), "labels": ["apple", "banana"], "conf_threshold": 0.7}
    payload = client.post("/detect", json=body).json()
    by_label = {}
    for det in payload["detections"]:
        by_label.setdefault(det["label"], []).append(det)
    apple = max(by_label["apple"], key=lambda d: d["confidence"])
    banana = max(by_label["banana"], key=lambda d: d["confidence"])
    assert apple["bbox"][0] < 150 < banana["bbox"][0]

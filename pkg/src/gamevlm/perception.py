"""Open-vocabulary detection with synonym-robust labels and pinhole grounding.

The mock detector renders detections by projecting ground-truth scene
objects through the camera model; the remote client speaks the detection
service wire contract (POST /detect with a base64 image and label list,
GET /health). Both yield the same :class:`Detection` shape so the rest of
the pipeline cannot tell them apart.

Scene files (extension ``.scene.json``) describe the ground truth the
mock detector and the simulator share: objects with world positions and
bounding sizes, named world-rectangle regions, the camera, the synonym
table, the workspace box, and the arm's home position.
"""

from __future__ import annotations

import base64
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .dsl import SynonymTable, EMPTY_SYNONYMS, normalize_label

__all__ = [
    "NonPositiveDepthError",
    "OutOfImageError",
    "BehindCameraError",
    "ObjectNotFoundError",
    "ServiceError",
    "BBox",
    "Detection",
    "CameraModel",
    "project_to_pixel",
    "pixel_to_world",
    "Category",
    "SceneObject",
    "Region",
    "Workspace",
    "SceneFile",
    "load_scene",
    "save_scene",
    "MockDetector",
    "detect",
    "resolve_label",
    "RemoteDetector",
    "SCENE_SUFFIX",
]

SCENE_SUFFIX = ".scene.json"


class NonPositiveDepthError(ValueError):
    pass


class OutOfImageError(ValueError):
    pass


class BehindCameraError(ValueError):
    pass


class ServiceError(RuntimeError):
    """Remote detection service failure."""


class ObjectNotFoundError(LookupError):
    def __init__(self, requested: str, seen_labels: Sequence[str]):
        self.requested = requested
        self.seen_labels = tuple(seen_labels)
        super().__init__(f"no detection matches {requested!r}; seen: {list(seen_labels)}")


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate bbox {self}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def iou(self, other: "BBox") -> float:
        ix = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        iy = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if ix <= 0 or iy <= 0:
            return 0.0
        inter = ix * iy
        return inter / (self.area + other.area - inter)


@dataclass(frozen=True)
class Detection:
    label: str
    bbox: BBox
    confidence: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", normalize_label(self.label))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def center(self) -> tuple[float, float]:
        return self.bbox.center


@dataclass
class CameraModel:
    """Pinhole intrinsics plus a rigid camera-to-world transform."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # 3x3, camera -> world
    translation: np.ndarray  # camera origin in world, meters
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9) or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be orthonormal with determinant +1")
        r.setflags(write=False)
        t.setflags(write=False)
        self.rotation = r
        self.translation = t

    def to_json(self) -> dict:
        return {
            "intrinsics": {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy},
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "CameraModel":
        intr = raw["intrinsics"]
        return cls(
            fx=float(intr["fx"]),
            fy=float(intr["fy"]),
            cx=float(intr["cx"]),
            cy=float(intr["cy"]),
            rotation=np.asarray(raw["rotation"], dtype=float),
            translation=np.asarray(raw["translation"], dtype=float),
            width=int(raw["width"]),
            height=int(raw["height"]),
        )


def project_to_pixel(point: Sequence[float], cam: CameraModel) -> tuple[tuple[float, float], float]:
    """Exact pinhole projection; returns ((u, v), camera-frame depth)."""
    p = np.asarray(point, dtype=float).reshape(3)
    x_cam = cam.rotation.T @ (p - cam.translation)
    z = float(x_cam[2])
    if z <= 0.0:
        raise BehindCameraError(f"point {p.tolist()} has camera-frame z {z} <= 0")
    u = cam.fx * float(x_cam[0]) / z + cam.cx
    v = cam.fy * float(x_cam[1]) / z + cam.cy
    return (u, v), z


def pixel_to_world(pixel: Sequence[float], depth: float, cam: CameraModel) -> np.ndarray:
    """Back-project a pixel at a known depth through the pinhole model."""
    u, v = float(pixel[0]), float(pixel[1])
    if depth <= 0.0:
        raise NonPositiveDepthError(f"depth {depth} must be positive")
    if not (0.0 <= u <= cam.width and 0.0 <= v <= cam.height):
        raise OutOfImageError(f"pixel ({u}, {v}) outside {cam.width}x{cam.height} image")
    x_cam = depth * np.array([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0])
    return cam.rotation @ x_cam + cam.translation


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------


class Category(enum.Enum):
    FRUIT = "fruit"
    BLOCK = "block"
    TOY = "toy"
    CONTAINER = "container"
    PLATE = "plate"


@dataclass(frozen=True)
class SceneObject:
    """Ground-truth object: center position and full bounding extents, meters."""

    label: str
    position: tuple[float, float, float]
    size: tuple[float, float, float]
    category: Category

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", normalize_label(self.label))
        pos = tuple(float(v) for v in self.position)
        size = tuple(float(v) for v in self.size)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise ValueError(f"bad position {self.position!r}")
        if len(size) != 3 or not all(v > 0 and math.isfinite(v) for v in size):
            raise ValueError(f"bad size {self.size!r}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "size", size)

    @property
    def top_z(self) -> float:
        return self.position[2] + self.size[2] / 2.0

    def corners(self) -> np.ndarray:
        """The 8 corners of the world-space bounding box."""
        c = np.asarray(self.position)
        h = np.asarray(self.size) / 2.0
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
        )
        return c + signs * h


@dataclass(frozen=True)
class Region:
    """Axis-aligned world rectangle; containment is center-point inclusion."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class Workspace:
    """Reachable box for the arm in world coordinates."""

    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0
    z_min: float = 0.0
    z_max: float = 0.6

    def contains(self, point: Sequence[float]) -> bool:
        x, y, z = (float(v) for v in point)
        return (
            self.x_min <= x <= self.x_max
            and self.y_min <= y <= self.y_max
            and self.z_min <= z <= self.z_max
        )


DEFAULT_HOME = (0.05, 0.05, 0.35)


@dataclass(frozen=True)
class SceneFile:
    objects: tuple[SceneObject, ...]
    camera: CameraModel
    regions: dict[str, Region] = field(default_factory=dict)
    synonyms: SynonymTable = EMPTY_SYNONYMS
    workspace: Workspace = Workspace()
    home: tuple[float, float, float] = DEFAULT_HOME

    def __post_init__(self) -> None:
        labels = [o.label for o in self.objects]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate object labels in scene: {labels}")

    def object_by_label(self, label: str) -> SceneObject | None:
        canon = self.synonyms.canonical(label)
        for obj in self.objects:
            if self.synonyms.canonical(obj.label) == canon:
                return obj
        return None


def save_scene(scene: SceneFile, path: str | Path) -> Path:
    path = Path(path)
    doc = {
        "objects": [
            {
                "label": o.label,
                "position": list(o.position),
                "size": list(o.size),
                "category": o.category.value,
            }
            for o in scene.objects
        ],
        "regions": {
            name: {"x_min": r.x_min, "y_min": r.y_min, "x_max": r.x_max, "y_max": r.y_max}
            for name, r in sorted(scene.regions.items())
        },
        "camera": scene.camera.to_json(),
        "synonyms": scene.synonyms.as_dict(),
        "workspace": {
            "x_min": scene.workspace.x_min,
            "x_max": scene.workspace.x_max,
            "y_min": scene.workspace.y_min,
            "y_max": scene.workspace.y_max,
            "z_min": scene.workspace.z_min,
            "z_max": scene.workspace.z_max,
        },
        "home": list(scene.home),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_scene(path: str | Path) -> SceneFile:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    objects = tuple(
        SceneObject(
            label=o["label"],
            position=tuple(o["position"]),
            size=tuple(o["size"]),
            category=Category(o["category"]),
        )
        for o in raw["objects"]
    )
    regions = {
        name: Region(r["x_min"], r["y_min"], r["x_max"], r["y_max"])
        for name, r in raw.get("regions", {}).items()
    }
    ws = raw.get("workspace", {})
    return SceneFile(
        objects=objects,
        camera=CameraModel.from_json(raw["camera"]),
        regions=regions,
        synonyms=SynonymTable.from_dict(raw.get("synonyms", {})),
        workspace=Workspace(**ws) if ws else Workspace(),
        home=tuple(raw.get("home", DEFAULT_HOME)),
    )


# ---------------------------------------------------------------------------
# Mock detector
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetectionNoise:
    """Optional degradation for the mock: bbox jitter and confidence spread."""

    bbox_jitter_px: float = 0.0
    confidence_spread: float = 0.0


class MockDetector:
    """Renders detections by projecting scene objects through the camera.

    A pure function of (objects, queries, seed): the RNG is constructed
    per call, so shared detectors are safe under concurrency.
    """

    def __init__(
        self,
        camera: CameraModel,
        synonyms: SynonymTable = EMPTY_SYNONYMS,
        noise: DetectionNoise | None = None,
    ):
        self.camera = camera
        self.synonyms = synonyms
        self.noise = noise

    @classmethod
    def from_scene(cls, scene: SceneFile, noise: DetectionNoise | None = None) -> "MockDetector":
        return cls(scene.camera, scene.synonyms, noise)

    def detect(
        self,
        objects: Iterable[SceneObject],
        query_labels: Sequence[str],
        *,
        seed: int = 0,
    ) -> list[Detection]:
        if not query_labels:
            raise ValueError("query label list must be non-empty")
        objects = list(objects)
        rng = np.random.default_rng(seed)
        jitter = self.noise.bbox_jitter_px if self.noise else 0.0
        spread = self.noise.confidence_spread if self.noise else 0.0
        out: list[Detection] = []
        for query in query_labels:
            canon = self.synonyms.canonical(query)
            for obj in objects:
                if self.synonyms.canonical(obj.label) != canon:
                    continue
                pixels = [project_to_pixel(corner, self.camera)[0] for corner in obj.corners()]
                us = [p[0] for p in pixels]
                vs = [p[1] for p in pixels]
                x_min, x_max = max(min(us), 0.0), min(max(us), float(self.camera.width))
                y_min, y_max = max(min(vs), 0.0), min(max(vs), float(self.camera.height))
                if jitter:
                    dx, dy = rng.normal(0.0, jitter, size=2)
                    x_min, x_max = x_min + dx, x_max + dx
                    y_min, y_max = y_min + dy, y_max + dy
                if x_min >= x_max or y_min >= y_max:
                    continue  # projected outside the frame
                confidence = 1.0 - abs(rng.normal(0.0, spread)) if spread else 1.0
                confidence = min(max(confidence, 0.0), 1.0)
                out.append(Detection(normalize_label(query), BBox(x_min, y_min, x_max, y_max), confidence))
        return out

    def depth_at(self, objects: Iterable[SceneObject], pixel: Sequence[float]) -> float:
        """Exact scene depth: the nearest object center by projected pixel
        distance, falling back to the table plane along the pixel ray."""
        best: tuple[float, float] | None = None  # (pixel distance, depth)
        for obj in objects:
            try:
                (u, v), depth = project_to_pixel(obj.position, self.camera)
            except BehindCameraError:
                continue
            dist = math.hypot(u - float(pixel[0]), v - float(pixel[1]))
            if best is None or dist < best[0]:
                best = (dist, depth)
        if best is not None and best[0] <= 12.0:
            return best[1]
        return self._table_depth(pixel)

    def _table_depth(self, pixel: Sequence[float]) -> float:
        # intersect the pixel ray with the z=0 plane
        u, v = float(pixel[0]), float(pixel[1])
        direction = self.camera.rotation @ np.array(
            [(u - self.camera.cx) / self.camera.fx, (v - self.camera.cy) / self.camera.fy, 1.0]
        )
        origin_z = float(self.camera.translation[2])
        dz = float(direction[2])
        if abs(dz) < 1e-12 or -origin_z / dz <= 0:
            raise OutOfImageError(f"pixel ({u}, {v}) ray never reaches the table")
        return -origin_z / dz


def detect(
    scene: SceneFile,
    query_labels: Sequence[str],
    *,
    noise: DetectionNoise | None = None,
    seed: int = 0,
) -> list[Detection]:
    """Mock detection straight from a scene file. Empty scenes yield []."""
    return MockDetector.from_scene(scene, noise).detect(scene.objects, query_labels, seed=seed)


def resolve_label(
    requested: str,
    detections: Sequence[Detection],
    synonyms: SynonymTable = EMPTY_SYNONYMS,
) -> Detection:
    """Pick the best synonym-equivalent detection for a requested label.

    Highest confidence wins; ties fall to the smaller bbox area, then the
    left-most x_min.
    """
    canon = synonyms.canonical(requested)
    candidates = [d for d in detections if synonyms.canonical(d.label) == canon]
    if not candidates:
        seen = sorted({d.label for d in detections})
        raise ObjectNotFoundError(requested, seen)
    return min(candidates, key=lambda d: (-d.confidence, d.bbox.area, d.bbox.x_min))


# ---------------------------------------------------------------------------
# Remote detection client
# ---------------------------------------------------------------------------


def _default_post(url: str, body: dict, timeout: float) -> tuple[int, dict]:
    import requests

    resp = requests.post(url, json=body, timeout=timeout)
    try:
        return resp.status_code, resp.json()
    except ValueError:
        return resp.status_code, {}


def _default_get(url: str, timeout: float) -> tuple[int, dict]:
    import requests

    resp = requests.get(url, timeout=timeout)
    try:
        return resp.status_code, resp.json()
    except ValueError:
        return resp.status_code, {}


class RemoteDetector:
    """Client for the detection service wire contract."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        post: Callable[[str, dict, float], tuple[int, dict]] = _default_post,
        get: Callable[[str, float], tuple[int, dict]] = _default_get,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._post = post
        self._get = get

    def detect(
        self, image_png: bytes, labels: Sequence[str], conf_threshold: float = 0.25
    ) -> list[Detection]:
        body = {
            "image": base64.b64encode(image_png).decode("ascii"),
            "labels": list(labels),
            "conf_threshold": float(conf_threshold),
        }
        try:
            status, payload = self._post(f"{self.base_url}/detect", body, self.timeout)
        except Exception as exc:
            raise ServiceError(f"detect call failed: {exc}") from exc
        if status != 200:
            raise ServiceError(f"detect returned HTTP {status}: {payload}")
        try:
            return [
                Detection(
                    label=d["label"],
                    bbox=BBox(*[float(v) for v in d["bbox"]]),
                    confidence=float(d["confidence"]),
                )
                for d in payload["detections"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"malformed detect response: {exc}") from exc

    def health(self) -> bool:
        try:
            status, payload = self._get(f"{self.base_url}/health", self.timeout)
        except Exception as exc:
            raise ServiceError(f"health call failed: {exc}") from exc
        return status == 200 and payload.get("status") == "ok"

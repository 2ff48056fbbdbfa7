"""Orthographic scene rasters: top-down labeled views, reference pictures,
and synthetic video frames. Stand-ins for real camera footage so the full
multi-modal input path runs at desk scale."""

from __future__ import annotations

import io
from typing import Iterable, Mapping, Sequence

from PIL import Image, ImageDraw

from .perception import Region, SceneObject

__all__ = ["render_world", "render_frames"]

TABLE_COLOR = (214, 196, 166)
REGION_COLOR = (120, 120, 120)

_LABEL_COLORS = {
    "red": (200, 40, 40),
    "green": (60, 150, 60),
    "blue": (50, 90, 200),
    "yellow": (230, 200, 40),
    "orange": (240, 140, 30),
    "purple": (140, 60, 160),
    "pink": (240, 150, 180),
    "white": (245, 245, 245),
    "black": (30, 30, 30),
}

_OBJECT_COLORS = {
    "apple": (200, 40, 40),
    "kiwifruit": (120, 110, 60),
    "orange": (240, 140, 30),
    "banana": (230, 210, 70),
    "plate": (235, 235, 235),
    "storage_box": (150, 110, 70),
    "monster": (90, 170, 90),
}


def _color_for(label: str) -> tuple[int, int, int]:
    for token in label.split("_"):
        if token in _LABEL_COLORS:
            return _LABEL_COLORS[token]
    for key, color in _OBJECT_COLORS.items():
        if key in label:
            return color
    # stable fallback hue from the label text
    h = sum(label.encode("utf-8")) % 255
    return (h, (h * 3) % 255, (h * 7) % 255)


def _to_px(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    # world [0,1]^2 mapped orthographically, y up
    return int(x * width), int((1.0 - y) * height)


def render_world(
    objects: Iterable[SceneObject],
    regions: Mapping[str, Region] | None = None,
    *,
    width: int = 320,
    height: int = 240,
    marker: tuple[float, float] | None = None,
    hand: tuple[float, float] | None = None,
) -> bytes:
    """Draw a top-down view; returns PNG bytes.

    ``marker`` draws a pointing cross (used for "place it there" reference
    pictures), ``hand`` a reaching-hand disc (used for motion frames).
    """
    img = Image.new("RGB", (width, height), TABLE_COLOR)
    draw = ImageDraw.Draw(img)

    for name, region in sorted((regions or {}).items()):
        p0 = _to_px(region.x_min, region.y_max, width, height)
        p1 = _to_px(region.x_max, region.y_min, width, height)
        draw.rectangle([p0, p1], outline=REGION_COLOR, width=2)
        draw.text((p0[0] + 3, p0[1] + 2), name, fill=REGION_COLOR)

    for obj in sorted(objects, key=lambda o: o.position[2]):
        cx, cy = _to_px(obj.position[0], obj.position[1], width, height)
        hx = max(int(obj.size[0] * width / 2), 3)
        hy = max(int(obj.size[1] * height / 2), 3)
        color = _color_for(obj.label)
        draw.rectangle([cx - hx, cy - hy, cx + hx, cy + hy], fill=color, outline=(20, 20, 20))
        draw.text((cx - hx, cy + hy + 2), obj.label, fill=(20, 20, 20))

    if marker is not None:
        mx, my = _to_px(marker[0], marker[1], width, height)
        draw.line([mx - 12, my, mx + 12, my], fill=(255, 0, 0), width=3)
        draw.line([mx, my - 12, mx, my + 12], fill=(255, 0, 0), width=3)

    if hand is not None:
        hx_, hy_ = _to_px(hand[0], hand[1], width, height)
        draw.ellipse([hx_ - 9, hy_ - 9, hx_ + 9, hy_ + 9], fill=(250, 220, 180), outline=(20, 20, 20))

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def render_frames(
    objects: Sequence[SceneObject],
    regions: Mapping[str, Region] | None,
    *,
    moving_label: str | None = None,
    move_to: tuple[float, float] | None = None,
    hand_from: tuple[float, float] | None = None,
    hand_to: tuple[float, float] | None = None,
    n_frames: int = 8,
    width: int = 320,
    height: int = 240,
) -> list[bytes]:
    """Temporally ordered frames: an object gliding to a target and/or a
    hand approaching a point."""
    if n_frames < 2:
        raise ValueError("a frame sequence needs at least two frames")
    frames: list[bytes] = []
    for k in range(n_frames):
        t = k / (n_frames - 1)
        frame_objects = []
        for obj in objects:
            if moving_label is not None and obj.label == moving_label and move_to is not None:
                x = obj.position[0] + (move_to[0] - obj.position[0]) * t
                y = obj.position[1] + (move_to[1] - obj.position[1]) * t
                obj = SceneObject(obj.label, (x, y, obj.position[2]), obj.size, obj.category)
            frame_objects.append(obj)
        hand = None
        if hand_from is not None and hand_to is not None:
            hand = (
                hand_from[0] + (hand_to[0] - hand_from[0]) * t,
                hand_from[1] + (hand_to[1] - hand_from[1]) * t,
            )
        frames.append(
            render_world(frame_objects, regions, width=width, height=height, hand=hand)
        )
    return frames

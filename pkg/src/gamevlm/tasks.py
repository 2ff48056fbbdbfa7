"""The six-task tabletop suite: scenes, capability criteria, difficulty,
instructions, and multi-modal input construction.

Capability criteria:

    SU   semantic understanding    grasp implicit meaning in the instruction
    SR   spatial reasoning         vertical / positional relationships
    SUG  scene understanding       read constraints out of the scene
    VU   video understanding      follow a frame sequence
    WKU  world knowledge           apply outside knowledge (vitamin C, villains)
    FP   future prediction         anticipate the next action

Each task carries the criteria it exercises, a difficulty tier, and an
input modality; reference pictures and video frames are rendered from the
scene so image/video tasks run without real footage.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .agents import FrameRole, TaskInput
from .perception import (
    CameraModel,
    Category,
    Region,
    SceneFile,
    SceneObject,
    SCENE_SUFFIX,
)
from .dsl import SynonymTable
from .render import render_frames, render_world

__all__ = [
    "TaskId",
    "Criterion",
    "Difficulty",
    "InputKind",
    "TaskSpec",
    "CRITERIA_MATRIX",
    "TASK_SUITE",
    "task_spec",
    "build_scene",
    "scene_filename",
    "write_default_scenes",
    "load_task_scenes",
    "build_task_input",
    "overhead_camera",
]


class TaskId(enum.Enum):
    TASK1 = "task1"
    TASK2 = "task2"
    TASK3 = "task3"
    TASK4 = "task4"
    TASK5 = "task5"
    TASK6 = "task6"


class Criterion(enum.Enum):
    SU = "SU"
    SR = "SR"
    SUG = "SUG"
    VU = "VU"
    WKU = "WKU"
    FP = "FP"


class Difficulty(enum.Enum):
    LOW = "low"
    MIDDLE = "middle"
    HIGH = "high"


class InputKind(enum.Enum):
    TEXT_ONLY = "text_only"
    TEXT_PLUS_IMAGE = "text_plus_image"
    TEXT_PLUS_VIDEO = "text_plus_video"


CRITERIA_MATRIX: dict[TaskId, frozenset[Criterion]] = {
    TaskId.TASK1: frozenset({Criterion.SUG, Criterion.WKU}),
    TaskId.TASK2: frozenset({Criterion.SU, Criterion.SUG}),
    TaskId.TASK3: frozenset({Criterion.SU, Criterion.SR, Criterion.SUG}),
    TaskId.TASK4: frozenset({Criterion.SR, Criterion.SUG}),
    TaskId.TASK5: frozenset({Criterion.SUG, Criterion.VU}),
    TaskId.TASK6: frozenset(
        {Criterion.SR, Criterion.SUG, Criterion.VU, Criterion.WKU, Criterion.FP}
    ),
}


@dataclass(frozen=True)
class TaskSpec:
    task_id: TaskId
    instruction: str
    input_kind: InputKind
    criteria: frozenset[Criterion]
    difficulty: Difficulty
    scene_name: str
    success_id: str

    def __post_init__(self) -> None:
        if self.criteria != CRITERIA_MATRIX[self.task_id]:
            raise ValueError(f"criteria for {self.task_id} do not match the suite matrix")


TASK_SUITE: tuple[TaskSpec, ...] = (
    TaskSpec(
        TaskId.TASK1,
        "The object with the highest vitamin C content.",
        InputKind.TEXT_ONLY,
        CRITERIA_MATRIX[TaskId.TASK1],
        Difficulty.LOW,
        "task1",
        "grasp_kiwifruit",
    ),
    TaskSpec(
        TaskId.TASK2,
        "Organize the table.",
        InputKind.TEXT_PLUS_IMAGE,
        CRITERIA_MATRIX[TaskId.TASK2],
        Difficulty.MIDDLE,
        "task2",
        "all_in_storage_box",
    ),
    TaskSpec(
        TaskId.TASK3,
        "Place the block in that location.",
        InputKind.TEXT_PLUS_IMAGE,
        CRITERIA_MATRIX[TaskId.TASK3],
        Difficulty.MIDDLE,
        "task3",
        "block_in_pink_plate_region",
    ),
    TaskSpec(
        TaskId.TASK4,
        "Stack blocks as shown in the picture.",
        InputKind.TEXT_PLUS_IMAGE,
        CRITERIA_MATRIX[TaskId.TASK4],
        Difficulty.LOW,
        "task4",
        "yellow_on_red_block",
    ),
    TaskSpec(
        TaskId.TASK5,
        "Imitate the behavior in the video.",
        InputKind.TEXT_PLUS_VIDEO,
        CRITERIA_MATRIX[TaskId.TASK5],
        Difficulty.LOW,
        "task5",
        "apple_on_plate",
    ),
    TaskSpec(
        TaskId.TASK6,
        "Predict the next action in the video.",
        InputKind.TEXT_PLUS_VIDEO,
        CRITERIA_MATRIX[TaskId.TASK6],
        Difficulty.HIGH,
        "task6",
        "grasp_orange",
    ),
)


def task_spec(task_id: TaskId) -> TaskSpec:
    for spec in TASK_SUITE:
        if spec.task_id is task_id:
            return spec
    raise KeyError(task_id)


# ---------------------------------------------------------------------------
# Scenes
# ---------------------------------------------------------------------------


def overhead_camera(width: int = 320, height: int = 240) -> CameraModel:
    """Camera 1 m above the table center, looking straight down."""
    rotation = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    return CameraModel(
        fx=220.0,
        fy=220.0,
        cx=width / 2.0,
        cy=height / 2.0,
        rotation=rotation,
        translation=np.array([0.5, 0.5, 1.0]),
        width=width,
        height=height,
    )


_FRUIT = (0.07, 0.07, 0.07)
_BLOCK = (0.04, 0.04, 0.04)
_TOY = (0.06, 0.06, 0.09)
_PLATE = (0.16, 0.16, 0.02)
_BOX = (0.18, 0.18, 0.08)


def _obj(label: str, x: float, y: float, size: tuple, category: Category) -> SceneObject:
    return SceneObject(label, (x, y, size[2] / 2.0), size, category)


def _scene_task1() -> SceneFile:
    return SceneFile(
        objects=(
            _obj("apple", 0.30, 0.60, _FRUIT, Category.FRUIT),
            _obj("kiwifruit", 0.55, 0.45, _FRUIT, Category.FRUIT),
            _obj("red_block", 0.70, 0.65, _BLOCK, Category.BLOCK),
            _obj("green_block", 0.40, 0.30, _BLOCK, Category.BLOCK),
        ),
        camera=overhead_camera(),
        regions={"delivery_zone": Region(0.05, 0.75, 0.25, 0.95)},
        synonyms=SynonymTable.from_dict({"red_apple": "apple", "red_fruit": "apple"}),
    )


def _scene_task2() -> SceneFile:
    return SceneFile(
        objects=(
            _obj("red_block", 0.25, 0.30, _BLOCK, Category.BLOCK),
            _obj("blue_block", 0.40, 0.70, _BLOCK, Category.BLOCK),
            _obj("monster_toy", 0.60, 0.35, _TOY, Category.TOY),
            _obj("storage_box", 0.78, 0.72, _BOX, Category.CONTAINER),
        ),
        camera=overhead_camera(),
        synonyms=SynonymTable.from_dict({"box": "storage_box", "monster": "monster_toy"}),
    )


def _scene_task3() -> SceneFile:
    return SceneFile(
        objects=(
            _obj("green_block", 0.30, 0.40, _BLOCK, Category.BLOCK),
            _obj("pink_plate", 0.70, 0.60, _PLATE, Category.PLATE),
            _obj("white_plate", 0.45, 0.78, _PLATE, Category.PLATE),
        ),
        camera=overhead_camera(),
        regions={"pink_plate": Region(0.61, 0.51, 0.79, 0.69)},
        synonyms=SynonymTable.from_dict({"that_location": "pink_plate"}),
    )


def _scene_task4() -> SceneFile:
    return SceneFile(
        objects=(
            _obj("yellow_block", 0.35, 0.35, _BLOCK, Category.BLOCK),
            _obj("red_block", 0.60, 0.55, _BLOCK, Category.BLOCK),
            _obj("blue_block", 0.75, 0.30, _BLOCK, Category.BLOCK),
        ),
        camera=overhead_camera(),
    )


def _scene_task5() -> SceneFile:
    return SceneFile(
        objects=(
            _obj("apple", 0.30, 0.35, _FRUIT, Category.FRUIT),
            _obj("plate", 0.65, 0.60, _PLATE, Category.PLATE),
            _obj("banana", 0.80, 0.30, _FRUIT, Category.FRUIT),
        ),
        camera=overhead_camera(),
        synonyms=SynonymTable.from_dict({"red_apple": "apple"}),
    )


def _scene_task6() -> SceneFile:
    return SceneFile(
        objects=(
            _obj("orange", 0.55, 0.50, _FRUIT, Category.FRUIT),
            _obj("apple", 0.30, 0.65, _FRUIT, Category.FRUIT),
            _obj("kiwifruit", 0.75, 0.30, _FRUIT, Category.FRUIT),
        ),
        camera=overhead_camera(),
    )


_SCENE_BUILDERS: dict[TaskId, Callable[[], SceneFile]] = {
    TaskId.TASK1: _scene_task1,
    TaskId.TASK2: _scene_task2,
    TaskId.TASK3: _scene_task3,
    TaskId.TASK4: _scene_task4,
    TaskId.TASK5: _scene_task5,
    TaskId.TASK6: _scene_task6,
}


def build_scene(task_id: TaskId) -> SceneFile:
    return _SCENE_BUILDERS[task_id]()


def scene_filename(task_id: TaskId) -> str:
    return f"{task_id.value}{SCENE_SUFFIX}"


def write_default_scenes(directory: str | Path) -> list[Path]:
    """Materialize all six task scenes as .scene.json files."""
    from .perception import save_scene

    directory = Path(directory)
    written = []
    for task_id in TaskId:
        written.append(save_scene(build_scene(task_id), directory / scene_filename(task_id)))
    return written


def load_task_scenes(directory: str | Path, tasks: list[TaskId] | None = None) -> dict[TaskId, SceneFile]:
    """Load scenes for the selected tasks; missing files raise FileNotFoundError."""
    from .perception import load_scene

    directory = Path(directory)
    out: dict[TaskId, SceneFile] = {}
    for task_id in tasks or list(TaskId):
        path = directory / scene_filename(task_id)
        if not path.exists():
            raise FileNotFoundError(f"scene file missing: {path}")
        out[task_id] = load_scene(path)
    return out


# ---------------------------------------------------------------------------
# Multi-modal input construction
# ---------------------------------------------------------------------------


def build_task_input(spec: TaskSpec, scene: SceneFile, *, n_frames: int = 8) -> TaskInput:
    """Instruction plus rendered frames appropriate to the task's modality."""
    if spec.input_kind is InputKind.TEXT_ONLY:
        return TaskInput(instruction=spec.instruction)

    if spec.input_kind is InputKind.TEXT_PLUS_IMAGE:
        marker = None
        objects = list(scene.objects)
        if spec.task_id is TaskId.TASK3:
            region = scene.regions["pink_plate"]
            marker = ((region.x_min + region.x_max) / 2.0, (region.y_min + region.y_max) / 2.0)
        elif spec.task_id is TaskId.TASK4:
            # goal arrangement: yellow sitting on red
            by_label = {o.label: o for o in objects}
            red = by_label["red_block"]
            yellow = by_label["yellow_block"]
            objects = [o for o in objects if o.label != "yellow_block"]
            objects.append(
                SceneObject(
                    "yellow_block",
                    (red.position[0], red.position[1], red.top_z + yellow.size[2] / 2.0),
                    yellow.size,
                    yellow.category,
                )
            )
        image = render_world(objects, scene.regions, marker=marker)
        return TaskInput(spec.instruction, (image,), FrameRole.REFERENCE_PICTURE)

    if spec.task_id is TaskId.TASK5:
        plate = scene.object_by_label("plate")
        frames = render_frames(
            scene.objects,
            scene.regions,
            moving_label="apple",
            move_to=(plate.position[0], plate.position[1]),
            n_frames=n_frames,
        )
    else:  # TASK6: a hand reaching toward the orange
        orange = scene.object_by_label("orange")
        frames = render_frames(
            scene.objects,
            scene.regions,
            hand_from=(0.05, 0.95),
            hand_to=(orange.position[0], orange.position[1]),
            n_frames=n_frames,
        )
    return TaskInput(spec.instruction, tuple(frames), FrameRole.VIDEO_FRAMES)

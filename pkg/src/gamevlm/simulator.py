"""Deterministic kinematic tabletop world and the episode/benchmark runner.

The world is a support graph rooted at the table: every object is either
supported by the table, supported by another object, or held by the
gripper. Execution is a pure state machine; there is no physics. Every
action grounds its target through the perception stack (detect, resolve
the label, back-project the pixel), so plans fail the way they would when
the camera cannot find the object.

Episode outcomes:

    SUCCESS            winning plan executed and the task predicate holds
    PLANNING_FAILURE   a proposal could not be parsed or validated
    EXECUTION_FAILURE  execution errored or the predicate is unmet
    PROTOCOL_FAILURE   an agent backend failed mid-protocol
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from .agents import BackendError, DecisionAgent, ExpertAgent, NoPlanBlockError, assemble_decision_prompt
from .dsl import (
    Action,
    EmptyPlanError,
    MoveHome,
    Pick,
    PlaceAt,
    PlaceOn,
    Plan,
    PlanSyntaxError,
    Stack,
    render_action,
)
from .game import (
    AgentFailureError,
    GameConfig,
    GameOutcome,
    InvalidProposalError,
    Resolution,
    run_game,
)
from .perception import (
    MockDetector,
    ObjectNotFoundError,
    SceneFile,
    SceneObject,
    Workspace,
    pixel_to_world,
    resolve_label,
)
from .tasks import TaskId, TaskSpec, build_task_input
from .transcript import Transcript, WARNING

__all__ = [
    "TABLE",
    "ObjectMissingError",
    "GripperFullError",
    "GripperEmptyError",
    "UnreachableTargetError",
    "WorldObject",
    "Gripper",
    "WorldState",
    "GroundedTarget",
    "execute_action",
    "StepRecord",
    "StepFailure",
    "ExecutionResult",
    "execute_plan",
    "task_success",
    "Outcome",
    "GameSummary",
    "EpisodeResult",
    "run_episode",
    "run_benchmark",
]

TABLE = "table"


class ObjectMissingError(LookupError):
    """The requested object is absent from the scene (or currently held)."""


class GripperFullError(RuntimeError):
    pass


class GripperEmptyError(RuntimeError):
    pass


class UnreachableTargetError(ValueError):
    """Target coordinates fall outside the configured workspace box."""


@dataclass(frozen=True)
class WorldObject:
    label: str
    position: tuple[float, float, float]
    size: tuple[float, float, float]
    category: object
    supported_by: str | None  # TABLE, another label, or None while held

    @property
    def top_z(self) -> float:
        return self.position[2] + self.size[2] / 2.0

    def as_scene_object(self) -> SceneObject:
        return SceneObject(self.label, self.position, self.size, self.category)


@dataclass(frozen=True)
class Gripper:
    held: str | None = None
    position: tuple[float, float, float] = (0.05, 0.05, 0.35)


@dataclass(frozen=True)
class WorldState:
    objects: dict[str, WorldObject]
    gripper: Gripper

    @classmethod
    def from_scene(cls, scene: SceneFile) -> "WorldState":
        objects: dict[str, WorldObject] = {}
        for obj in scene.objects:
            support = TABLE
            base_z = obj.position[2] - obj.size[2] / 2.0
            for other in scene.objects:
                if other.label == obj.label:
                    continue
                if (
                    abs(base_z - other.top_z) < 1e-6
                    and abs(obj.position[0] - other.position[0]) <= other.size[0] / 2.0
                    and abs(obj.position[1] - other.position[1]) <= other.size[1] / 2.0
                ):
                    support = other.label
                    break
            objects[obj.label] = WorldObject(
                obj.label, obj.position, obj.size, obj.category, support
            )
        return cls(objects=objects, gripper=Gripper(position=scene.home))

    def visible_objects(self) -> list[SceneObject]:
        """Everything the camera can see; a held object is occluded by the arm."""
        return [
            o.as_scene_object() for o in self.objects.values() if o.label != self.gripper.held
        ]

    def supported_children(self, label: str) -> list[WorldObject]:
        return [o for o in self.objects.values() if o.supported_by == label]

    def settled_snapshot(self) -> tuple:
        """Canonical world key excluding arm pose: held objects are reported
        as 'in gripper', everything else by support and rounded position."""
        rows = []
        for label in sorted(self.objects):
            obj = self.objects[label]
            if label == self.gripper.held:
                rows.append((label, "gripper", None))
            else:
                rows.append(
                    (label, obj.supported_by, tuple(round(v, 9) for v in obj.position))
                )
        return tuple(rows), self.gripper.held

    def check_invariants(self) -> None:
        """Raise AssertionError on support cycles or a supported held object."""
        held = self.gripper.held
        for label, obj in self.objects.items():
            if label == held:
                assert obj.supported_by is None, f"held object {label} has a supporter"
                continue
            seen = {label}
            cur = obj.supported_by
            while cur != TABLE:
                assert cur is not None, f"{label} is unsupported but not held"
                assert cur in self.objects, f"{label} supported by missing {cur}"
                assert cur != held, f"{label} rests on the held object"
                assert cur not in seen, f"support cycle through {cur}"
                seen.add(cur)
                cur = self.objects[cur].supported_by


@dataclass(frozen=True)
class GroundedTarget:
    """Perception's answer for one label: canonical scene label, the
    back-projected world point, and the object's top height."""

    label: str
    point: tuple[float, float, float]
    top_z: float


def _reseat_children(objects: dict[str, WorldObject], picked: WorldObject) -> None:
    """Objects the picked one supported drop onto its old supporter."""
    new_support = picked.supported_by
    for child in list(objects.values()):
        if child.supported_by != picked.label:
            continue
        if new_support == TABLE or new_support is None:
            rest_z = child.size[2] / 2.0
            support: str = TABLE
        else:
            supporter = objects[new_support]
            rest_z = supporter.top_z + child.size[2] / 2.0
            support = new_support
        objects[child.label] = replace(
            child,
            supported_by=support,
            position=(child.position[0], child.position[1], rest_z),
        )


def execute_action(
    world: WorldState,
    action: Action,
    grounding: GroundedTarget | None = None,
    *,
    workspace: Workspace = Workspace(),
    home: tuple[float, float, float] = (0.05, 0.05, 0.35),
) -> WorldState:
    """Apply one action; returns the new world, never mutates the old."""
    objects = dict(world.objects)
    gripper = world.gripper

    if isinstance(action, MoveHome):
        if gripper.held is not None:
            held = objects[gripper.held]
            objects[gripper.held] = replace(held, position=home)
        return WorldState(objects, Gripper(gripper.held, home))

    if isinstance(action, Pick):
        if gripper.held is not None:
            raise GripperFullError(f"cannot pick {action.target}: holding {gripper.held}")
        if grounding is None or grounding.label not in objects:
            raise ObjectMissingError(f"{action.target} not found in the scene")
        target = objects[grounding.label]
        grasp = (grounding.point[0], grounding.point[1], grounding.top_z)
        if not workspace.contains(grasp):
            raise UnreachableTargetError(f"grasp point {grasp} outside workspace")
        _reseat_children(objects, target)
        objects[target.label] = replace(target, supported_by=None, position=grasp)
        return WorldState(objects, Gripper(target.label, grasp))

    if isinstance(action, (PlaceOn, Stack)):
        if gripper.held is None:
            raise GripperEmptyError(f"{render_action(action)} with an empty gripper")
        if grounding is None or grounding.label not in objects:
            target_label = action.bottom if isinstance(action, Stack) else action.target
            raise ObjectMissingError(f"{target_label} not found in the scene")
        target = objects[grounding.label]
        held = objects[gripper.held]
        pos = (target.position[0], target.position[1], target.top_z + held.size[2] / 2.0)
        if not workspace.contains(pos):
            raise UnreachableTargetError(f"place point {pos} outside workspace")
        objects[held.label] = replace(held, supported_by=target.label, position=pos)
        hover = (pos[0], pos[1], pos[2] + held.size[2])
        return WorldState(objects, Gripper(None, hover))

    if isinstance(action, PlaceAt):
        if gripper.held is None:
            raise GripperEmptyError(f"{render_action(action)} with an empty gripper")
        held = objects[gripper.held]
        rest = (action.position[0], action.position[1], held.size[2] / 2.0)
        if not workspace.contains(rest):
            raise UnreachableTargetError(f"target {rest} outside workspace")
        objects[held.label] = replace(held, supported_by=TABLE, position=rest)
        hover = (rest[0], rest[1], rest[2] + held.size[2])
        return WorldState(objects, Gripper(None, hover))

    raise TypeError(f"not an action: {action!r}")


# ---------------------------------------------------------------------------
# Plan execution with perception grounding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    index: int
    action: str
    error: str | None = None


@dataclass(frozen=True)
class StepFailure:
    step_index: int
    error: Exception


@dataclass(frozen=True)
class ExecutionResult:
    world: WorldState
    steps: tuple[StepRecord, ...]
    error: StepFailure | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _ground(
    world: WorldState, detector: MockDetector, label: str, *, seed: int
) -> GroundedTarget:
    """detect -> resolve_label -> pixel_to_world, against the live world."""
    visible = world.visible_objects()
    if not visible:
        raise ObjectMissingError(f"{label}: nothing visible")
    detections = detector.detect(visible, [label], seed=seed)
    try:
        detection = resolve_label(label, detections, detector.synonyms)
    except ObjectNotFoundError as exc:
        raise ObjectMissingError(str(exc)) from exc
    depth = detector.depth_at(visible, detection.center)
    point = pixel_to_world(detection.center, depth, detector.camera)

    canon = detector.synonyms.canonical(label)
    candidates = [
        world.objects[o.label]
        for o in visible
        if detector.synonyms.canonical(o.label) == canon
    ]
    if not candidates:
        raise ObjectMissingError(f"{label} resolved but absent from the world")
    nearest = min(
        candidates,
        key=lambda o: sum((a - b) ** 2 for a, b in zip(o.position, point)),
    )
    return GroundedTarget(
        label=nearest.label,
        point=(float(point[0]), float(point[1]), float(point[2])),
        top_z=nearest.top_z,
    )


def _target_label(action: Action) -> str | None:
    if isinstance(action, Pick):
        return action.target
    if isinstance(action, PlaceOn):
        return action.target
    if isinstance(action, Stack):
        return action.bottom
    return None


def execute_plan(
    world: WorldState,
    plan: Plan,
    detector: MockDetector,
    *,
    workspace: Workspace = Workspace(),
    home: tuple[float, float, float] = (0.05, 0.05, 0.35),
    seed: int = 0,
) -> ExecutionResult:
    """Fold the plan through execute_action with per-step grounding.

    Stops at the first failing step; the partial log and the world as of
    the failure are returned rather than raised.
    """
    steps: list[StepRecord] = []
    for i, action in enumerate(plan.actions):
        try:
            label = _target_label(action)
            grounding = (
                _ground(world, detector, label, seed=seed + i) if label is not None else None
            )
            world = execute_action(world, action, grounding, workspace=workspace, home=home)
        except (
            ObjectMissingError,
            GripperFullError,
            GripperEmptyError,
            UnreachableTargetError,
        ) as exc:
            steps.append(StepRecord(i, render_action(action), str(exc)))
            return ExecutionResult(world, tuple(steps), StepFailure(i, exc))
        steps.append(StepRecord(i, render_action(action)))
    return ExecutionResult(world, tuple(steps))


# ---------------------------------------------------------------------------
# Task success predicates
# ---------------------------------------------------------------------------


def _in_region(world: WorldState, scene: SceneFile, label: str, region_name: str) -> bool:
    obj = world.objects.get(label)
    region = scene.regions.get(region_name)
    if obj is None or region is None:
        return False
    return region.contains(obj.position[0], obj.position[1])


def task_success(spec: TaskSpec, world: WorldState, scene: SceneFile) -> bool:
    """Geometric success predicate for each task."""
    objects = world.objects
    sid = spec.success_id
    if sid == "grasp_kiwifruit":
        return world.gripper.held == "kiwifruit" or _in_region(
            world, scene, "kiwifruit", "delivery_zone"
        )
    if sid == "all_in_storage_box":
        movable = [
            o for o in objects.values() if getattr(o.category, "value", None) in ("block", "toy")
        ]
        return bool(movable) and all(o.supported_by == "storage_box" for o in movable)
    if sid == "block_in_pink_plate_region":
        blocks = [o for o in objects.values() if getattr(o.category, "value", None) == "block"]
        region = scene.regions.get("pink_plate")
        if not blocks or region is None:
            return False
        return all(
            region.contains(o.position[0], o.position[1]) and o.label != world.gripper.held
            for o in blocks
        )
    if sid == "yellow_on_red_block":
        yellow = objects.get("yellow_block")
        return yellow is not None and yellow.supported_by == "red_block"
    if sid == "apple_on_plate":
        apple = objects.get("apple")
        return apple is not None and apple.supported_by == "plate"
    if sid == "grasp_orange":
        return world.gripper.held == "orange"
    raise KeyError(f"unknown success predicate {sid!r}")


# ---------------------------------------------------------------------------
# Episodes and benchmarks
# ---------------------------------------------------------------------------


class Outcome(enum.Enum):
    SUCCESS = "success"
    PLANNING_FAILURE = "planning_failure"
    EXECUTION_FAILURE = "execution_failure"
    PROTOCOL_FAILURE = "protocol_failure"


@dataclass(frozen=True)
class GameSummary:
    winner: str
    resolution: Resolution
    final_scores: tuple[tuple[str, int], ...]
    phases_played: int

    @classmethod
    def from_outcome(cls, outcome: GameOutcome) -> "GameSummary":
        return cls(
            winner=outcome.winner,
            resolution=outcome.resolution,
            final_scores=outcome.final_scores.scores,
            phases_played=outcome.phases_played,
        )


@dataclass(frozen=True)
class EpisodeResult:
    task_id: TaskId
    round_index: int
    outcome: Outcome
    game: GameSummary | None
    world_key: tuple | None
    transcript: Transcript

    @property
    def success(self) -> bool:
        return self.outcome is Outcome.SUCCESS


def run_episode(
    spec: TaskSpec,
    scene: SceneFile,
    agents: Mapping[str, DecisionAgent],
    expert: ExpertAgent,
    config: GameConfig = GameConfig(),
    *,
    seed: int = 0,
    round_index: int = 0,
    clock: Callable[[], float] | None = None,
) -> EpisodeResult:
    """One end-to-end attempt: input, proposals, arbitration, execution.

    Failures never raise; they classify the episode. The transcript always
    exists, even for episodes that die before the game starts.
    """
    transcript = Transcript(clock)
    detector = MockDetector.from_scene(scene)

    def failed(outcome: Outcome, stage: str, error: Exception) -> EpisodeResult:
        transcript.append(
            WARNING, {"stage": stage, "error": str(error)}, phase=0, round=0
        )
        return EpisodeResult(spec.task_id, round_index, outcome, None, None, transcript)

    task_input = build_task_input(spec, scene)
    detections = (
        detector.detect(scene.objects, [o.label for o in scene.objects], seed=seed)
        if scene.objects
        else []
    )

    proposals: dict[str, Plan] = {}
    for agent_id in sorted(agents):
        agent = agents[agent_id]
        prompt = assemble_decision_prompt(agent.template, task_input, detections)
        try:
            _, proposals[agent_id] = agent.propose(prompt)
        except BackendError as exc:
            return failed(Outcome.PROTOCOL_FAILURE, "proposal", exc)
        except (NoPlanBlockError, PlanSyntaxError, EmptyPlanError) as exc:
            return failed(Outcome.PLANNING_FAILURE, "proposal", exc)

    try:
        game = run_game(
            proposals, agents, expert, config, synonyms=scene.synonyms, transcript=transcript
        )
    except InvalidProposalError as exc:
        return failed(Outcome.PLANNING_FAILURE, "validation", exc)
    except AgentFailureError as exc:
        return failed(Outcome.PROTOCOL_FAILURE, "game", exc)

    world = WorldState.from_scene(scene)
    result = execute_plan(
        world, game.winning_plan, detector, workspace=scene.workspace, home=scene.home, seed=seed
    )
    summary = GameSummary.from_outcome(game)
    if result.error is not None:
        transcript.append(
            WARNING,
            {"stage": "execution", "error": str(result.error.error), "step": result.error.step_index},
            phase=0, round=0,
        )
        return EpisodeResult(
            spec.task_id, round_index, Outcome.EXECUTION_FAILURE, summary,
            result.world.settled_snapshot(), transcript,
        )
    outcome = (
        Outcome.SUCCESS if task_success(spec, result.world, scene) else Outcome.EXECUTION_FAILURE
    )
    return EpisodeResult(
        spec.task_id, round_index, outcome, summary, result.world.settled_snapshot(), transcript
    )


AgentFactory = Callable[[TaskSpec, int], Mapping[str, DecisionAgent]]
ExpertFactory = Callable[[TaskSpec, int], ExpertAgent]


def run_benchmark(
    specs: Sequence[TaskSpec],
    scenes: Mapping[TaskId, SceneFile],
    make_agents: AgentFactory,
    make_expert: ExpertFactory,
    config: GameConfig = GameConfig(),
    *,
    rounds: int = 10,
    seed: int = 0,
    jobs: int = 1,
    clock: Callable[[], float] | None = None,
) -> list[EpisodeResult]:
    """Run every (task, round) episode; results come back in task/round
    order regardless of completion order."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    ordered = [(spec, r) for spec in sorted(specs, key=lambda s: s.task_id.value) for r in range(rounds)]

    def one(args: tuple[TaskSpec, int]) -> EpisodeResult:
        spec, round_index = args
        episode_seed = seed * 100_003 + int(spec.task_id.value[-1]) * 1_009 + round_index
        return run_episode(
            spec,
            scenes[spec.task_id],
            make_agents(spec, round_index),
            make_expert(spec, round_index),
            config,
            seed=episode_seed,
            round_index=round_index,
            clock=clock,
        )

    if jobs <= 1:
        return [one(item) for item in ordered]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, ordered))

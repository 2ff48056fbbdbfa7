"""Two-agent robot task planning with zero-sum question-and-answer
arbitration, synonym-robust perception, a kinematic tabletop simulator,
and a benchmark harness."""

from .dsl import (
    Action,
    MoveHome,
    Pick,
    PlaceAt,
    PlaceOn,
    Plan,
    Stack,
    SynonymTable,
    normalize_label,
    parse_plan,
    plans_equivalent,
    render_plan,
    validate_plan,
)
from .game import (
    GameConfig,
    GameOutcome,
    Judgment,
    Resolution,
    Scoreboard,
    Verdict,
    apply_verdict,
    run_game,
    run_phase,
    select_winner,
)
from .agents import (
    ChatMessage,
    DecisionAgent,
    ExpertAgent,
    FrameRole,
    RemoteBackend,
    ScriptedBackend,
    TaskInput,
    assemble_decision_prompt,
)
from .perception import (
    BBox,
    CameraModel,
    Detection,
    MockDetector,
    RemoteDetector,
    SceneFile,
    detect,
    load_scene,
    pixel_to_world,
    project_to_pixel,
    resolve_label,
    save_scene,
)
from .simulator import (
    EpisodeResult,
    Outcome,
    WorldState,
    execute_action,
    execute_plan,
    run_benchmark,
    run_episode,
    task_success,
)
from .tasks import TASK_SUITE, Criterion, TaskId, TaskSpec, build_scene, task_spec
from .analytics import (
    BenchmarkReport,
    aggregate_by_criteria,
    aggregate_by_task,
    build_report,
    overall_rate,
    round_rate,
)

__version__ = "0.1.0"

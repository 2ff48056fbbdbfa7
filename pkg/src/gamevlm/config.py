"""Run configuration: TOML loading, validation, and backend construction.

A run needs exactly two decision agents and one expert. Agents come in
three kinds: ``scripted`` (replies from a JSON script file), ``remote``
(a chat endpoint), and the benchmark-only ``fixture`` mode in which both
agents and the expert are generated per (task, round) from a failure
schedule. ``${VAR}`` environment interpolation is honored in credential
fields (endpoint and detection URLs) and nowhere else.
"""

from __future__ import annotations

import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .agents import API_KEY_ENV, DecisionAgent, ExpertAgent, RemoteBackend, load_script
from .fixtures import AGENT_A, AGENT_B, REFERENCE_FAILURE_SCHEDULE, fixture_providers
from .game import GameConfig
from .tasks import TaskId, TaskSpec

__all__ = ["ConfigError", "BackendSpec", "RunConfig", "load_run_config", "providers_from_config"]

DETECT_URL_ENV = "GAMEVLM_DETECT_URL"

_ENV_PATTERN = re.compile(r"\$\{([A-Z0-9_]+)\}")


class ConfigError(ValueError):
    pass


def _interpolate_env(value: str, context: str) -> str:
    def sub(match: re.Match) -> str:
        name = match.group(1)
        resolved = os.environ.get(name)
        if resolved is None:
            raise ConfigError(f"{context}: environment variable {name} is not set")
        return resolved

    return _ENV_PATTERN.sub(sub, value)


@dataclass(frozen=True)
class BackendSpec:
    kind: str  # "scripted" | "remote"
    script: Path | None = None
    endpoint_url: str = ""
    model_name: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    api_key_env: str = API_KEY_ENV

    def build(self):
        if self.kind == "scripted":
            if self.script is None:
                raise ConfigError("scripted backend needs a 'script' path")
            if not self.script.exists():
                raise FileNotFoundError(f"script file missing: {self.script}")
            return load_script(self.script)
        if self.kind == "remote":
            if not self.endpoint_url or not self.model_name:
                raise ConfigError("remote backend needs 'endpoint_url' and 'model_name'")
            return RemoteBackend(
                endpoint_url=self.endpoint_url,
                model_name=self.model_name,
                timeout=self.timeout,
                max_retries=self.max_retries,
                api_key_env=self.api_key_env,
            )
        raise ConfigError(f"unknown backend kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    mode: str  # "explicit" | "fixture"
    agent_specs: dict[str, BackendSpec] = field(default_factory=dict)
    expert_spec: BackendSpec | None = None
    failures: dict[TaskId, frozenset[int]] = field(default_factory=dict)
    game: GameConfig = GameConfig()
    scene_dir: Path | None = None
    tasks: tuple[TaskId, ...] = tuple(TaskId)
    rounds: int = 10
    seed: int = 0
    output_dir: Path = Path("gamevlm_out")
    jobs: int = 1
    detection_backend: str = "mock"
    detection_url: str = ""
    plan_scene: Path | None = None
    plan_labels: tuple[str, ...] = ()


def _backend_spec(raw: dict, base: Path, context: str) -> BackendSpec:
    kind = raw.get("kind", "")
    if kind not in ("scripted", "remote"):
        raise ConfigError(f"{context}: kind must be 'scripted' or 'remote', got {kind!r}")
    script = raw.get("script")
    endpoint = raw.get("endpoint_url", "")
    if endpoint:
        endpoint = _interpolate_env(str(endpoint), context)
    return BackendSpec(
        kind=kind,
        script=(base / script) if script else None,
        endpoint_url=endpoint,
        model_name=str(raw.get("model_name", "")),
        timeout=float(raw.get("timeout", 30.0)),
        max_retries=int(raw.get("max_retries", 2)),
        api_key_env=str(raw.get("api_key_env", API_KEY_ENV)),
    )


def load_run_config(path: str | Path) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file missing: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.parent

    agents_raw = raw.get("agents", {})
    mode = agents_raw.get("mode", "explicit")
    if mode not in ("explicit", "fixture"):
        raise ConfigError(f"agents.mode must be 'explicit' or 'fixture', got {mode!r}")

    agent_specs: dict[str, BackendSpec] = {}
    expert_spec: BackendSpec | None = None
    failures: dict[TaskId, frozenset[int]] = {}
    if mode == "explicit":
        for key, agent_id in (("a", AGENT_A), ("b", AGENT_B)):
            if key not in agents_raw:
                raise ConfigError(f"explicit mode needs [agents.{key}]; exactly two decision agents required")
            agent_specs[agent_id] = _backend_spec(agents_raw[key], base, f"agents.{key}")
        if "expert" not in raw:
            raise ConfigError("an [expert] section is required")
        expert_spec = _backend_spec(raw["expert"], base, "expert")
    else:
        raw_failures = agents_raw.get("failures", {})
        for task_name, rounds_list in raw_failures.items():
            try:
                task = TaskId(task_name)
            except ValueError as exc:
                raise ConfigError(f"agents.failures: unknown task {task_name!r}") from exc
            failures[task] = frozenset(int(r) for r in rounds_list)
        if not failures:
            failures = dict(REFERENCE_FAILURE_SCHEDULE)

    game_raw = raw.get("game", {})
    try:
        game = GameConfig(
            rounds_per_phase=int(game_raw.get("rounds_per_phase", 3)),
            point_delta=int(game_raw.get("point_delta", 10)),
            max_tiebreak_phases=int(game_raw.get("max_tiebreak_phases", 5)),
        )
    except ValueError as exc:
        raise ConfigError(f"[game]: {exc}") from exc

    run_raw = raw.get("run", {})
    task_names = run_raw.get("tasks")
    if task_names:
        try:
            tasks = tuple(TaskId(t) for t in task_names)
        except ValueError as exc:
            raise ConfigError(f"run.tasks: {exc}") from exc
    else:
        tasks = tuple(TaskId)
    rounds = int(run_raw.get("rounds", 10))
    if rounds < 1:
        raise ConfigError("run.rounds must be >= 1")
    jobs = int(run_raw.get("jobs", 1))
    if jobs < 1:
        raise ConfigError("run.jobs must be >= 1")

    detect_raw = raw.get("detection", {})
    backend = detect_raw.get("backend", "mock")
    if backend not in ("mock", "remote"):
        raise ConfigError(f"detection.backend must be 'mock' or 'remote', got {backend!r}")
    url = str(detect_raw.get("url", ""))
    if backend == "remote":
        if not url:
            url = "${" + DETECT_URL_ENV + "}"
        url = _interpolate_env(url, "detection.url")

    plan_raw = raw.get("plan", {})
    plan_scene = plan_raw.get("scene")
    plan_labels = tuple(str(l) for l in plan_raw.get("labels", ()))

    return RunConfig(
        mode=mode,
        agent_specs=agent_specs,
        expert_spec=expert_spec,
        failures=failures,
        game=game,
        scene_dir=(base / run_raw["scene_dir"]) if run_raw.get("scene_dir") else None,
        tasks=tasks,
        rounds=rounds,
        seed=int(run_raw.get("seed", 0)),
        output_dir=base / str(run_raw.get("output_dir", "gamevlm_out")),
        jobs=jobs,
        detection_backend=backend,
        detection_url=url,
        plan_scene=(base / plan_scene) if plan_scene else None,
        plan_labels=plan_labels,
    )


def providers_from_config(cfg: RunConfig):
    """(make_agents, make_expert) factories; fresh sessions per episode."""
    if cfg.mode == "fixture":
        return fixture_providers(cfg.failures)

    backends = {agent_id: spec.build() for agent_id, spec in cfg.agent_specs.items()}
    assert cfg.expert_spec is not None
    expert_backend = cfg.expert_spec.build()

    def make_agents(spec: TaskSpec, round_index: int) -> dict[str, DecisionAgent]:
        return {agent_id: DecisionAgent(agent_id, b) for agent_id, b in backends.items()}

    def make_expert(spec: TaskSpec, round_index: int) -> ExpertAgent:
        return ExpertAgent(expert_backend)

    return make_agents, make_expert

"""Command-line entry points.

    gamevlm plan --instruction <text> [--image <path>]... [--video-frames <dir>] --config <path>
    gamevlm bench --config <path> [--rounds N] [--jobs N]
    gamevlm replay <transcript>

Exit codes: 0 success, 1 task failure, 2 config error, 3 IO error,
4 backend error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from .agents import (
    BackendError,
    FrameRole,
    NoPlanBlockError,
    TaskInput,
    assemble_decision_prompt,
)
from .analytics import build_report, render_criteria_table, render_task_table, write_report
from .config import ConfigError, load_run_config, providers_from_config
from .dsl import EmptyPlanError, Plan, PlanSyntaxError, render_plan
from .game import AgentFailureError, InvalidProposalError, run_game, verify_events
from .perception import RemoteDetector, ServiceError, detect as mock_detect, load_scene
from .simulator import run_benchmark
from .tasks import load_task_scenes, task_spec
from .transcript import CorruptTranscriptError, read_transcript, write_transcript

EXIT_OK = 0
EXIT_TASK_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BACKEND = 4


def _packaged_scene_dir() -> Path:
    return Path(str(resources.files("gamevlm").joinpath("scenes")))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamevlm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="arbitrate one instruction and print the winning plan")
    p_plan.add_argument("--instruction", required=True)
    p_plan.add_argument("--image", action="append", default=[], help="image file; repeatable")
    p_plan.add_argument("--video-frames", help="directory of ordered frame images")
    p_plan.add_argument("--config", required=True)

    p_bench = sub.add_parser("bench", help="run the benchmark suite and write reports")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--rounds", type=int)
    p_bench.add_argument("--jobs", type=int)

    p_replay = sub.add_parser("replay", help="verify a transcript's score accounting")
    p_replay.add_argument("transcript")
    return parser


def cmd_plan(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    if cfg.mode != "explicit":
        raise ConfigError("gamevlm plan needs explicit [agents.a]/[agents.b]/[expert] backends")

    images: list[bytes] = [Path(p).read_bytes() for p in args.image]
    frame_role = FrameRole.REFERENCE_PICTURE if images else FrameRole.NONE
    if args.video_frames:
        frame_dir = Path(args.video_frames)
        frame_paths = sorted(p for p in frame_dir.iterdir() if p.is_file())
        if len(frame_paths) < 2:
            raise FileNotFoundError(f"need at least two frames in {frame_dir}")
        images = [p.read_bytes() for p in frame_paths]
        frame_role = FrameRole.VIDEO_FRAMES
    task_input = TaskInput(args.instruction, tuple(images), frame_role)

    detections = []
    synonyms = None
    if cfg.detection_backend == "remote" and images and cfg.plan_labels:
        remote = RemoteDetector(cfg.detection_url)
        detections = remote.detect(images[0], list(cfg.plan_labels))
    elif cfg.plan_scene is not None and cfg.detection_backend == "mock":
        scene = load_scene(cfg.plan_scene)
        detections = mock_detect(scene, [o.label for o in scene.objects], seed=cfg.seed)
        synonyms = scene.synonyms

    make_agents, make_expert = providers_from_config(cfg)
    spec = task_spec(cfg.tasks[0])
    agents = make_agents(spec, 0)
    expert = make_expert(spec, 0)

    proposals: dict[str, Plan] = {}
    for agent_id in sorted(agents):
        agent = agents[agent_id]
        prompt = assemble_decision_prompt(agent.template, task_input, detections)
        try:
            _, proposals[agent_id] = agent.propose(prompt)
        except (NoPlanBlockError, PlanSyntaxError, EmptyPlanError) as exc:
            print(f"proposal from {agent_id} failed: {exc}")
            return EXIT_TASK_FAILURE

    kwargs = {"synonyms": synonyms} if synonyms is not None else {}
    try:
        outcome = run_game(proposals, agents, expert, cfg.game, **kwargs)
    except InvalidProposalError as exc:
        print(f"invalid proposal: {exc}")
        return EXIT_TASK_FAILURE

    path = write_transcript(outcome.transcript, cfg.output_dir / "transcript_plan.jsonl")
    print(f"winner: {outcome.winner}")
    print(f"resolution: {outcome.resolution.value}")
    print(f"final scores: {outcome.final_scores.as_dict()}")
    print(f"plan: {render_plan(outcome.winning_plan)}")
    print(f"transcript: {path}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    rounds = args.rounds if args.rounds is not None else cfg.rounds
    jobs = args.jobs if args.jobs is not None else cfg.jobs
    if rounds < 1 or jobs < 1:
        raise ConfigError("rounds and jobs must be >= 1")

    scene_dir = cfg.scene_dir if cfg.scene_dir is not None else _packaged_scene_dir()
    scenes = load_task_scenes(scene_dir, list(cfg.tasks))
    specs = [task_spec(t) for t in cfg.tasks]
    make_agents, make_expert = providers_from_config(cfg)

    episodes = run_benchmark(
        specs, scenes, make_agents, make_expert, cfg.game,
        rounds=rounds, seed=cfg.seed, jobs=jobs,
    )
    for ep in episodes:
        write_transcript(
            ep.transcript,
            cfg.output_dir / f"transcript_{ep.task_id.value}_{ep.round_index:02d}.jsonl",
        )
    report = build_report(episodes, rounds)
    json_path, tables_path = write_report(report, cfg.output_dir)
    print(render_task_table(report))
    print(render_criteria_table(report))
    print(f"report: {json_path}")
    print(f"tables: {tables_path}")
    print(f"transcripts: {len(episodes)} files in {cfg.output_dir}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.transcript)
    if not path.exists():
        raise FileNotFoundError(f"transcript missing: {path}")
    events = read_transcript(path)
    check = verify_events(events)
    if check.ok:
        print(f"PASS {path} ({len(events)} events)")
        return EXIT_OK
    print(f"FAIL {path} at seq {check.divergent_seq}: {check.reason}")
    return EXIT_TASK_FAILURE


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(args)
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_replay(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CorruptTranscriptError as exc:
        print(f"corrupt transcript: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FileNotFoundError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BackendError, AgentFailureError, ServiceError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    raise SystemExit(main())

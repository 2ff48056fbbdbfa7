"""Deterministic scripted-agent fixtures for benchmark runs.

A failure schedule maps each task to the round indices that must fail.
On a failing round both agents propose the task's wrong plan, which is
internally consistent, executes (or not), and misses the success
predicate. On the first non-failing round of each task the agents
disagree so the zero-sum game actually plays out: agent_a proposes the
correct plan, agent_b the wrong one, and the expert's verdict script
hands the phase to agent_a. Every other round both agents agree on the
correct plan.
"""

from __future__ import annotations

from typing import Mapping

from .agents import DecisionAgent, ExpertAgent, ScriptedBackend
from .tasks import TaskId, TaskSpec

__all__ = [
    "AGENT_A",
    "AGENT_B",
    "CORRECT_PLANS",
    "WRONG_PLANS",
    "REFERENCE_FAILURE_SCHEDULE",
    "wrap_plan_reply",
    "fixture_agents",
    "fixture_expert",
    "fixture_providers",
]

AGENT_A = "agent_a"
AGENT_B = "agent_b"

CORRECT_PLANS: dict[TaskId, str] = {
    TaskId.TASK1: "pick(kiwifruit)",
    TaskId.TASK2: (
        "pick(red_block); place_on(storage_box); "
        "pick(blue_block); place_on(storage_box); "
        "pick(monster_toy); place_on(storage_box)"
    ),
    TaskId.TASK3: "pick(green_block); place_on(pink_plate)",
    TaskId.TASK4: "pick(yellow_block); stack(yellow_block, red_block)",
    TaskId.TASK5: "pick(apple); place_on(plate)",
    TaskId.TASK6: "pick(orange)",
}

# Plausible-but-wrong alternatives: each parses, validates, and usually
# executes, but leaves the success predicate unmet.
WRONG_PLANS: dict[TaskId, str] = {
    TaskId.TASK1: "pick(apple)",
    TaskId.TASK2: "pick(red_block); place_on(storage_box); pick(blue_block); place_on(storage_box)",
    TaskId.TASK3: "pick(green_block); place_on(white_plate)",
    TaskId.TASK4: "pick(red_block); stack(red_block, yellow_block)",
    TaskId.TASK5: "pick(banana); place_on(plate)",
    TaskId.TASK6: "pick(apple)",
}

# Failure counts per task used by the reference benchmark fixture:
# (1, 2, 2, 1, 0, 4) failures out of ten rounds.
REFERENCE_FAILURE_SCHEDULE: dict[TaskId, frozenset[int]] = {
    TaskId.TASK1: frozenset({3}),
    TaskId.TASK2: frozenset({1, 7}),
    TaskId.TASK3: frozenset({2, 8}),
    TaskId.TASK4: frozenset({5}),
    TaskId.TASK5: frozenset(),
    TaskId.TASK6: frozenset({0, 3, 6, 9}),
}


def wrap_plan_reply(plan_text: str, rationale: str = "Scene and instruction considered.") -> str:
    """Package plan text as a full agent reply with the PLAN fence."""
    return f"{rationale}\nPLAN:\n{plan_text}\nEND_PLAN"


def _first_contested_round(failures: frozenset[int], rounds_hint: int = 10) -> int:
    for r in range(max(rounds_hint, max(failures, default=0) + 2)):
        if r not in failures:
            return r
    return 0


def fixture_agents(
    spec: TaskSpec,
    round_index: int,
    failures: Mapping[TaskId, frozenset[int]] = REFERENCE_FAILURE_SCHEDULE,
) -> dict[str, DecisionAgent]:
    task_failures = failures.get(spec.task_id, frozenset())
    correct = wrap_plan_reply(CORRECT_PLANS[spec.task_id])
    wrong = wrap_plan_reply(WRONG_PLANS[spec.task_id], "A defensible but mistaken reading.")
    if round_index in task_failures:
        a_reply, b_reply = wrong, wrong
    elif round_index == _first_contested_round(task_failures):
        a_reply, b_reply = correct, wrong
    else:
        a_reply, b_reply = correct, correct
    return {
        AGENT_A: DecisionAgent(AGENT_A, ScriptedBackend(proposals=(a_reply,))),
        AGENT_B: DecisionAgent(AGENT_B, ScriptedBackend(proposals=(b_reply,))),
    }


def fixture_expert(
    spec: TaskSpec,
    round_index: int,
    failures: Mapping[TaskId, frozenset[int]] = REFERENCE_FAILURE_SCHEDULE,
) -> ExpertAgent:
    # contested rounds: every answer from agent_b is unsatisfactory and
    # every answer from agent_a satisfactory, so agent_a wins phase 1
    return ExpertAgent(ScriptedBackend(consistency=False, verdicts=("U", "S"), cycle=True))


def fixture_providers(failures: Mapping[TaskId, frozenset[int]] = REFERENCE_FAILURE_SCHEDULE):
    """(make_agents, make_expert) pair for run_benchmark."""

    def make_agents(spec: TaskSpec, round_index: int) -> dict[str, DecisionAgent]:
        return fixture_agents(spec, round_index, failures)

    def make_expert(spec: TaskSpec, round_index: int) -> ExpertAgent:
        return fixture_expert(spec, round_index, failures)

    return make_agents, make_expert

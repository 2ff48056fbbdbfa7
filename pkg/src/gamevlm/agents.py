"""Decision and expert agents over scripted or remote chat backends.

A decision agent proposes a plan, questions its opponent, and defends its
own plan; the expert agent checks whether two proposals are consistent
and judges every question/answer exchange.

Backends come in two flavors. ``ScriptedBackend`` replays canned replies
from per-call-slot scripts (proposal, question[i], answer[i], verdict[i],
consistency) and is fully deterministic; each game gets a fresh cursor
via :meth:`ScriptedBackend.fresh`. ``RemoteBackend`` speaks the common
chat-completions wire shape: POST ``{model, messages: [{role, content:
[{type: "text"|"image", ...}]}], temperature}`` with images attached as
base64 data URIs, bearer credentials read from an environment variable.

Expert replies from remote backends must carry a sentinel line:
``VERDICT: SATISFACTORY`` / ``VERDICT: UNSATISFACTORY`` for exchange
judgments, ``CONSISTENCY: CONSISTENT`` / ``CONSISTENCY: INCONSISTENT``
for the consistency check. Free-text replies without a sentinel raise
:class:`UnparseableJudgmentError` rather than being guessed at.
"""

from __future__ import annotations

import base64
import enum
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .dsl import Plan, SynonymTable, EMPTY_SYNONYMS, parse_plan, plans_equivalent, render_action, render_plan
from .game import Judgment

__all__ = [
    "BackendError",
    "NoPlanBlockError",
    "MissingSectionError",
    "UnparseableJudgmentError",
    "FrameRole",
    "TaskInput",
    "Role",
    "ChatMessage",
    "DecisionPromptTemplate",
    "ExpertPromptTemplate",
    "default_decision_template",
    "default_expert_template",
    "assemble_decision_prompt",
    "assemble_expert_prompt",
    "sample_frames",
    "extract_plan_block",
    "ScriptedBackend",
    "RemoteBackend",
    "load_script",
    "ConsistencyResult",
    "DecisionAgent",
    "ExpertAgent",
    "MAX_VIDEO_FRAMES",
]

MAX_VIDEO_FRAMES = 8

API_KEY_ENV = "GAMEVLM_API_KEY"

VERDICT_SATISFACTORY = "VERDICT: SATISFACTORY"
VERDICT_UNSATISFACTORY = "VERDICT: UNSATISFACTORY"
CONSISTENCY_CONSISTENT = "CONSISTENCY: CONSISTENT"
CONSISTENCY_INCONSISTENT = "CONSISTENCY: INCONSISTENT"

PLAN_OPEN = "PLAN:"
PLAN_CLOSE = "END_PLAN"


class BackendError(RuntimeError):
    """Backend call failed (after retries, for remote backends)."""


class NoPlanBlockError(ValueError):
    """An agent reply did not contain a PLAN: ... END_PLAN block."""


class MissingSectionError(ValueError):
    """A prompt template has an empty section."""


class UnparseableJudgmentError(ValueError):
    """A remote expert reply carried no sentinel line."""


# ---------------------------------------------------------------------------
# Task input and chat messages
# ---------------------------------------------------------------------------


class FrameRole(enum.Enum):
    NONE = "none"
    REFERENCE_PICTURE = "reference_picture"
    VIDEO_FRAMES = "video_frames"


@dataclass(frozen=True)
class TaskInput:
    """A multi-modal instruction: text plus optional encoded RGB frames.

    ``VIDEO_FRAMES`` inputs carry at least two temporally ordered frames;
    ordering is the caller's responsibility.
    """

    instruction: str
    images: tuple[bytes, ...] = ()
    frame_role: FrameRole = FrameRole.NONE

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")
        object.__setattr__(self, "images", tuple(self.images))
        if self.frame_role is FrameRole.VIDEO_FRAMES and len(self.images) < 2:
            raise ValueError("video input needs at least two frames")


class Role(enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    text: str
    attachments: tuple[bytes, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "attachments", tuple(self.attachments))
        if self.attachments and self.role is not Role.USER:
            raise ValueError("only user messages may carry attachments")


def sample_frames(frames: Sequence[bytes], max_frames: int = MAX_VIDEO_FRAMES) -> tuple[bytes, ...]:
    """Evenly sample at most ``max_frames`` frames, keeping first and last."""
    if len(frames) <= max_frames:
        return tuple(frames)
    step = (len(frames) - 1) / (max_frames - 1)
    indices = sorted({round(i * step) for i in range(max_frames)})
    return tuple(frames[i] for i in indices)


# ---------------------------------------------------------------------------
# Prompt templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecisionPromptTemplate:
    role_playing: str
    code_repository: str
    chain_of_thought: str
    examples: tuple[tuple[str, str], ...]
    question_section: str


@dataclass(frozen=True)
class ExpertPromptTemplate:
    role_playing: str
    judgment: str
    question_and_answer: str
    evaluation: str


DECISION_SECTION_HEADERS = (
    "## Role playing",
    "## Code repository",
    "## Chain of thought",
    "## Examples",
    "## Questions",
)

EXPERT_SECTION_HEADERS = (
    "## Role playing",
    "## Judgment",
    "## Question and answer",
    "## Evaluation",
)

_PRIMITIVE_CATALOG = """\
You control the arm through exactly these primitives, one per statement,
statements separated by ';':
  pick(<object>)             grasp the named object
  place_on(<target>)         put the held object onto the named target
  place_at(<x>, <y>[, <z>])  put the held object down at integer millimeter
                             table coordinates
  stack(<top>, <bottom>)     put the held block onto the named bottom block
  move_home()                retract the arm without touching the scene
Write the final plan between a line 'PLAN:' and a line 'END_PLAN'.
No other commands exist; anything else will be rejected."""


def default_decision_template() -> DecisionPromptTemplate:
    return DecisionPromptTemplate(
        role_playing=(
            "You are a careful robot task planner controlling a tabletop arm "
            "with a single gripper. You turn an instruction plus what the "
            "camera sees into the shortest correct action plan."
        ),
        code_repository=_PRIMITIVE_CATALOG,
        chain_of_thought=(
            "Reason step by step before committing: list the relevant objects, "
            "restate what the instruction actually requires, check that every "
            "pick is followed by a place, then write the plan."
        ),
        examples=(
            ("Put the apple on the plate.", "pick(apple); place_on(plate)"),
            (
                "Tidy the blocks into the box.",
                "pick(red_block); place_on(storage_box); pick(blue_block); place_on(storage_box)",
            ),
        ),
        question_section=(
            "If another planner proposes a different plan, challenge the "
            "specific step you disagree with, and answer challenges to your "
            "own plan by defending the step that was questioned."
        ),
    )


def default_expert_template() -> ExpertPromptTemplate:
    return ExpertPromptTemplate(
        role_playing=(
            "You are a strict arbiter for robot task plans. You never plan "
            "yourself; you only compare, question, and evaluate."
        ),
        judgment=(
            "Two plans are consistent when they perform the same actions on "
            "the same objects in the same order, allowing for synonymous "
            "object names. Report consistency with a final line "
            "'CONSISTENCY: CONSISTENT' or 'CONSISTENCY: INCONSISTENT'."
        ),
        question_and_answer=(
            "You will see one question from a planner and the answer given by "
            "its opponent. Judge only whether the answer actually resolves "
            "the question."
        ),
        evaluation=(
            "Finish with exactly one line 'VERDICT: SATISFACTORY' if the "
            "answer resolves the question, else 'VERDICT: UNSATISFACTORY'."
        ),
    )


def _require(section: str, value: str) -> str:
    if not value.strip():
        raise MissingSectionError(f"template section {section!r} is empty")
    return value


def assemble_decision_prompt(
    template: DecisionPromptTemplate,
    task: TaskInput,
    detections: Sequence[Any] = (),
) -> list[ChatMessage]:
    """System message (five fixed sections) plus one user message.

    The user message carries the instruction verbatim, a summary of the
    detections (label, pixel center, confidence), and the task's image
    attachments; video inputs are sampled down to at most
    ``MAX_VIDEO_FRAMES`` evenly spaced frames.
    """
    if not template.examples:
        raise MissingSectionError("template section 'examples' is empty")
    example_lines = "\n".join(
        f"- task: {_require('examples', t)}\n  plan: {_require('examples', p)}"
        for t, p in template.examples
    )
    sections = (
        _require("role_playing", template.role_playing),
        _require("code_repository", template.code_repository),
        _require("chain_of_thought", template.chain_of_thought),
        example_lines,
        _require("question_section", template.question_section),
    )
    system_text = "\n\n".join(
        f"{header}\n{body}" for header, body in zip(DECISION_SECTION_HEADERS, sections)
    )

    if detections:
        seen = "\n".join(
            f"- {d.label} at pixel ({d.center[0]:.0f}, {d.center[1]:.0f}), confidence {d.confidence:.2f}"
            for d in detections
        )
    else:
        seen = "- none reported"

    images = task.images
    if task.frame_role is FrameRole.VIDEO_FRAMES:
        images = sample_frames(images)
    user_text = f"Instruction: {task.instruction}\n\nDetected objects:\n{seen}"
    if task.frame_role is FrameRole.REFERENCE_PICTURE:
        user_text += "\n\nA reference picture is attached."
    elif task.frame_role is FrameRole.VIDEO_FRAMES:
        user_text += f"\n\n{len(images)} ordered video frames are attached."

    return [
        ChatMessage(Role.SYSTEM, system_text),
        ChatMessage(Role.USER, user_text, attachments=images),
    ]


def assemble_expert_prompt(template: ExpertPromptTemplate, request: str) -> list[ChatMessage]:
    """System message (four fixed sections) plus the request as user text."""
    sections = (
        _require("role_playing", template.role_playing),
        _require("judgment", template.judgment),
        _require("question_and_answer", template.question_and_answer),
        _require("evaluation", template.evaluation),
    )
    system_text = "\n\n".join(
        f"{header}\n{body}" for header, body in zip(EXPERT_SECTION_HEADERS, sections)
    )
    return [ChatMessage(Role.SYSTEM, system_text), ChatMessage(Role.USER, request)]


# ---------------------------------------------------------------------------
# Plan block extraction
# ---------------------------------------------------------------------------


def extract_plan_block(reply: str) -> tuple[str, str]:
    """Split a reply into (rationale, plan text) at the PLAN fence.

    The block opens at a line reading ``PLAN:`` and closes at a line
    reading ``END_PLAN``; everything outside is rationale.
    """
    lines = reply.splitlines()
    open_i = close_i = None
    for i, line in enumerate(lines):
        if line.strip() == PLAN_OPEN and open_i is None:
            open_i = i
        elif line.strip() == PLAN_CLOSE and open_i is not None:
            close_i = i
            break
    if open_i is None or close_i is None:
        raise NoPlanBlockError("reply has no PLAN: ... END_PLAN block")
    plan_text = "\n".join(lines[open_i + 1 : close_i])
    rationale = "\n".join(lines[:open_i] + lines[close_i + 1 :]).strip()
    return rationale, plan_text


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptedBackend:
    """Deterministic canned replies, one slot per protocol call.

    ``answers`` may be an ordered sequence (consumed per call) or a map
    keyed by exact question text with a ``"DEFAULT"`` fallback entry.
    When ``cycle`` is true, exhausted sequences wrap around; otherwise the
    next call raises :class:`BackendError`.
    """

    proposals: tuple[str, ...] = ()
    questions: tuple[str, ...] = ()
    answers: tuple[str, ...] | tuple[tuple[str, str], ...] = ()
    answers_keyed: bool = False
    verdicts: tuple[str, ...] = ()
    consistency: bool | None = None
    cycle: bool = True

    def fresh(self) -> "ScriptedSession":
        return ScriptedSession(self)


class ScriptedSession:
    """Per-game cursor state over a :class:`ScriptedBackend` script."""

    def __init__(self, script: ScriptedBackend):
        self.script = script
        self._cursors = {"proposal": 0, "question": 0, "answer": 0, "verdict": 0}

    def _next(self, slot: str, seq: tuple[str, ...]) -> str | None:
        if not seq:
            return None
        i = self._cursors[slot]
        self._cursors[slot] += 1
        if i >= len(seq):
            if not self.script.cycle:
                raise BackendError(f"scripted {slot} entries exhausted after {len(seq)} calls")
            i %= len(seq)
        return seq[i]

    def next_proposal(self) -> str:
        reply = self._next("proposal", self.script.proposals)
        if reply is None:
            raise BackendError("no proposal scripted")
        return reply

    def next_question(self) -> str | None:
        return self._next("question", self.script.questions)

    def next_answer(self, question: str) -> str | None:
        if self.script.answers_keyed:
            keyed = dict(self.script.answers)  # type: ignore[arg-type]
            return keyed.get(question, keyed.get("DEFAULT"))
        return self._next("answer", self.script.answers)  # type: ignore[arg-type]

    def next_verdict(self) -> str:
        reply = self._next("verdict", self.script.verdicts)
        if reply is None:
            raise BackendError("no verdicts scripted")
        return reply

    def consistency_reply(self) -> bool:
        if self.script.consistency is None:
            raise BackendError("no consistency verdict scripted")
        return bool(self.script.consistency)


def load_script(path: str | Path) -> ScriptedBackend:
    """Load a script file: JSON slots proposal/question/answer/verdict/consistency."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    proposals = raw.get("proposal", ())
    if isinstance(proposals, str):
        proposals = (proposals,)
    answers = raw.get("answer", ())
    answers_keyed = isinstance(answers, dict)
    if answers_keyed:
        answers = tuple(sorted(answers.items()))
    else:
        answers = tuple(answers)
    consistency = raw.get("consistency")
    if isinstance(consistency, str):
        consistency = consistency.strip().lower() in ("consistent", "true", "yes")
    return ScriptedBackend(
        proposals=tuple(proposals),
        questions=tuple(raw.get("question", ())),
        answers=answers,
        answers_keyed=answers_keyed,
        verdicts=tuple(raw.get("verdict", ())),
        consistency=consistency,
        cycle=bool(raw.get("cycle", True)),
    )


def _default_transport(url: str, body: dict, headers: dict, timeout: float) -> tuple[int, dict]:
    import requests

    resp = requests.post(url, json=body, headers=headers, timeout=timeout)
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    return resp.status_code, payload


@dataclass
class RemoteBackend:
    """Chat-completions client with bounded retries and image attachments."""

    endpoint_url: str
    model_name: str
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0
    api_key_env: str = API_KEY_ENV
    transport: Callable[[str, dict, dict, float], tuple[int, dict]] = field(
        default=_default_transport, repr=False
    )

    def fresh(self) -> "RemoteBackend":
        return self  # stateless; per-game cursors are a scripted-backend concern

    def _wire_messages(self, messages: Sequence[ChatMessage]) -> list[dict]:
        wire = []
        for m in messages:
            content: list[dict] = [{"type": "text", "text": m.text}]
            for img in m.attachments:
                data_uri = "data:image/png;base64," + base64.b64encode(img).decode("ascii")
                content.append({"type": "image", "image": data_uri})
            wire.append({"role": m.role.value, "content": content})
        return wire

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        body = {
            "model": self.model_name,
            "messages": self._wire_messages(messages),
            "temperature": self.temperature,
        }
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                status, payload = self.transport(self.endpoint_url, body, headers, self.timeout)
                if status != 200:
                    raise BackendError(f"endpoint returned HTTP {status}")
                return _extract_assistant_text(payload)
            except BackendError as exc:
                last_error = exc
            except Exception as exc:  # network errors from the transport
                last_error = exc
        raise BackendError(f"request failed after {self.max_retries + 1} attempts: {last_error}")


def _extract_assistant_text(payload: dict) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"unrecognized response shape: {exc}") from exc
    if isinstance(content, str):
        return content
    if isinstance(content, list):
        return "".join(part.get("text", "") for part in content if isinstance(part, dict))
    raise BackendError(f"unrecognized content type {type(content).__name__}")


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    rationale: str = ""


def _first_difference(own: Plan, opp: Plan) -> str:
    """Non-empty question naming a concrete action difference."""
    for i, (mine, theirs) in enumerate(zip(own.actions, opp.actions)):
        if mine != theirs:
            return (
                f"At step {i + 1} my plan does {render_action(mine)} while yours does "
                f"{render_action(theirs)}. Why is {render_action(theirs)} the right call?"
            )
    if len(opp.actions) > len(own.actions):
        extra = render_action(opp.actions[len(own.actions)])
        return (
            f"Your plan continues with {extra} after step {len(own.actions)}, "
            f"where mine stops. What does {extra} accomplish?"
        )
    if len(own.actions) > len(opp.actions):
        missing = render_action(own.actions[len(opp.actions)])
        return (
            f"Your plan stops after step {len(opp.actions)} and never does {missing}. "
            f"How is the task complete without {missing}?"
        )
    return "Our plans render identically; what makes yours preferable?"


class DecisionAgent:
    """One plan proposer / debater, bound to a fresh backend session."""

    def __init__(self, agent_id: str, backend, template: DecisionPromptTemplate | None = None):
        self.agent_id = agent_id
        self.template = template or default_decision_template()
        self._session = backend.fresh()
        self._remote = isinstance(self._session, RemoteBackend)

    def propose(self, prompt: Sequence[ChatMessage]) -> tuple[str, Plan]:
        """Run the backend on the prompt; returns (rationale, parsed plan)."""
        if self._remote:
            reply = self._session.complete(list(prompt))
        else:
            reply = self._session.next_proposal()
        rationale, plan_text = extract_plan_block(reply)
        return rationale, parse_plan(plan_text)

    def pose_question(self, own_plan: Plan, opponent_plan: Plan, history: Sequence[Any] = ()) -> str:
        if self._remote:
            request = (
                f"Your plan: {render_plan(own_plan)}\n"
                f"Opponent plan: {render_plan(opponent_plan)}\n"
                "Ask the opponent one pointed question about the step where the plans differ."
            )
            reply = self._session.complete(
                assemble_decision_prompt(self.template, TaskInput(instruction=request))
            )
            return reply.strip() or _first_difference(own_plan, opponent_plan)
        scripted = self._session.next_question()
        if scripted:
            return scripted
        return _first_difference(own_plan, opponent_plan)

    def answer_question(self, question: str, own_plan: Plan) -> str:
        if self._remote:
            request = (
                f"Your plan: {render_plan(own_plan)}\n"
                f"Question from the opponent: {question}\n"
                "Answer the question directly, defending your plan."
            )
            reply = self._session.complete(
                assemble_decision_prompt(self.template, TaskInput(instruction=request))
            )
            if reply.strip():
                return reply
        else:
            scripted = self._session.next_answer(question)
            if scripted:
                return scripted
        return f"My plan stands as written: {render_plan(own_plan)}. The questioned step follows directly from the instruction."


class ExpertAgent:
    """Consistency checker and exchange judge."""

    def __init__(self, backend, template: ExpertPromptTemplate | None = None):
        self.template = template or default_expert_template()
        self._session = backend.fresh()
        self._remote = isinstance(self._session, RemoteBackend)

    def check_consistency(
        self, plan_a: Plan, plan_b: Plan, synonyms: SynonymTable = EMPTY_SYNONYMS
    ) -> ConsistencyResult:
        """Deterministic fast path first; the backend only sees real disagreements."""
        if plans_equivalent(plan_a, plan_b, synonyms):
            return ConsistencyResult(True, "canonical sequences equal")
        if not self._remote:
            verdict = self._session.consistency_reply()
            return ConsistencyResult(verdict, "scripted consistency verdict")
        request = (
            f"Plan A: {render_plan(plan_a)}\n"
            f"Plan B: {render_plan(plan_b)}\n"
            "Are these the same procedure? Finish with the CONSISTENCY sentinel line."
        )
        reply = self._session.complete(assemble_expert_prompt(self.template, request))
        verdict = _scan_sentinels(reply, CONSISTENCY_CONSISTENT, CONSISTENCY_INCONSISTENT)
        return ConsistencyResult(verdict, reply.strip())

    def judge_exchange(
        self,
        question: str,
        answer: str,
        plans: Mapping[str, Plan] | None = None,
        history: Sequence[Any] = (),
    ) -> tuple[Judgment, str]:
        if not self._remote:
            raw = self._session.next_verdict().strip().lower()
            if raw in ("s", "sat", "satisfactory"):
                return Judgment.SATISFACTORY, "scripted verdict"
            if raw in ("u", "unsat", "unsatisfactory"):
                return Judgment.UNSATISFACTORY, "scripted verdict"
            raise BackendError(f"unrecognized scripted verdict {raw!r}")
        plan_lines = ""
        if plans:
            plan_lines = "".join(f"Plan of {a}: {render_plan(p)}\n" for a, p in sorted(plans.items()))
        request = (
            f"{plan_lines}Question: {question}\nAnswer: {answer}\n"
            "Judge the answer. Finish with the VERDICT sentinel line."
        )
        reply = self._session.complete(assemble_expert_prompt(self.template, request))
        satisfactory = _scan_sentinels(reply, VERDICT_SATISFACTORY, VERDICT_UNSATISFACTORY)
        judgment = Judgment.SATISFACTORY if satisfactory else Judgment.UNSATISFACTORY
        return judgment, reply.strip()


def _scan_sentinels(reply: str, positive: str, negative: str) -> bool:
    """First sentinel by position wins; neither present is an error."""
    pos = reply.find(positive)
    neg = reply.find(negative)
    if pos == -1 and neg == -1:
        raise UnparseableJudgmentError(f"reply contains neither {positive!r} nor {negative!r}")
    if pos == -1:
        return False
    if neg == -1:
        return True
    return pos < neg

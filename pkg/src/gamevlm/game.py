"""Zero-sum arbitration between two plan proposals.

Flow: both proposals are validated, an expert checks whether they are
consistent (equivalent); consistent proposals skip the game entirely.
Otherwise the agents play phases of question-and-answer rounds. Every
exchange is judged by the expert and moves a fixed number of points
between questioner and respondent:

    unsatisfactory answer:  respondent -delta, questioner +delta
    satisfactory answer:    respondent +delta, questioner -delta

The score sum is therefore invariant (zero). After each phase the agent
with the strictly higher score wins and its plan is executed; ties replay
the phase up to a cap, after which the tie is broken deterministically in
favor of the first agent id and flagged in the transcript.

Within a round each agent questions the other once (two directed
exchanges). The phase's opening questioner alternates across phases,
starting from the lexicographically smaller agent id.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

from .dsl import Plan, SynonymTable, EMPTY_SYNONYMS, ValidationReport, render_plan, validate_plan
from . import transcript as tr
from .transcript import Transcript, TranscriptEvent

__all__ = [
    "Judgment",
    "Resolution",
    "Scoreboard",
    "Verdict",
    "GameConfig",
    "GameOutcome",
    "UnknownAgentError",
    "InvalidProposalError",
    "AgentFailureError",
    "apply_verdict",
    "select_winner",
    "run_phase",
    "run_game",
    "ReplayCheck",
    "verify_events",
]


class Judgment(enum.Enum):
    SATISFACTORY = "satisfactory"
    UNSATISFACTORY = "unsatisfactory"


class Resolution(enum.Enum):
    CONSISTENT = "consistent"
    SCORE_DECIDED = "score_decided"
    FORCED_TIEBREAK = "forced_tiebreak"


class UnknownAgentError(KeyError):
    """A verdict references an agent id that is not on the board."""


class InvalidProposalError(ValueError):
    """A proposal failed plan validation and cannot enter the game."""

    def __init__(self, agent_id: str, report: ValidationReport):
        self.agent_id = agent_id
        self.report = report
        problems = "; ".join(v.message for v in report.violations) or "empty plan"
        super().__init__(f"proposal from {agent_id} is invalid: {problems}")


class AgentFailureError(RuntimeError):
    """A backend call failed after retries; the game cannot continue."""

    def __init__(self, agent_id: str, cause: Exception):
        self.agent_id = agent_id
        self.cause = cause
        super().__init__(f"agent {agent_id} failed: {cause}")


@dataclass(frozen=True)
class Scoreboard:
    """Integer scores for exactly two agents; the sum is always zero."""

    scores: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        pairs = tuple(sorted((str(a), int(s)) for a, s in dict(self.scores).items()))
        if len(pairs) != 2:
            raise ValueError(f"scoreboard needs exactly two agents, got {len(pairs)}")
        if sum(s for _, s in pairs) != 0:
            raise ValueError(f"scores must sum to zero, got {pairs}")
        object.__setattr__(self, "scores", pairs)

    @classmethod
    def zero(cls, agent_ids: Sequence[str]) -> "Scoreboard":
        return cls(tuple((a, 0) for a in agent_ids))

    @property
    def agent_ids(self) -> tuple[str, str]:
        return tuple(a for a, _ in self.scores)  # type: ignore[return-value]

    def score_of(self, agent_id: str) -> int:
        for a, s in self.scores:
            if a == agent_id:
                return s
        raise UnknownAgentError(agent_id)

    def as_dict(self) -> dict[str, int]:
        return dict(self.scores)


@dataclass(frozen=True)
class Verdict:
    exchange_index: int
    questioner: str
    respondent: str
    judgment: Judgment
    rationale: str = ""

    def __post_init__(self) -> None:
        if self.questioner == self.respondent:
            raise ValueError("questioner and respondent must differ")


@dataclass(frozen=True)
class GameConfig:
    rounds_per_phase: int = 3
    point_delta: int = 10
    max_tiebreak_phases: int = 5

    def __post_init__(self) -> None:
        if self.rounds_per_phase < 1:
            raise ValueError("rounds_per_phase must be >= 1")
        if self.point_delta <= 0:
            raise ValueError("point_delta must be > 0")
        if self.max_tiebreak_phases < 1:
            raise ValueError("max_tiebreak_phases must be >= 1")


@dataclass(frozen=True)
class GameOutcome:
    winner: str
    winning_plan: Plan
    final_scores: Scoreboard
    phases_played: int
    resolution: Resolution
    transcript: Transcript


class DecisionAgentLike(Protocol):
    agent_id: str

    def pose_question(self, own_plan: Plan, opponent_plan: Plan, history: Sequence[TranscriptEvent]) -> str: ...

    def answer_question(self, question: str, own_plan: Plan) -> str: ...


class ExpertAgentLike(Protocol):
    def check_consistency(self, plan_a: Plan, plan_b: Plan, synonyms: SynonymTable): ...

    def judge_exchange(
        self,
        question: str,
        answer: str,
        plans: Mapping[str, Plan],
        history: Sequence[TranscriptEvent],
    ) -> tuple[Judgment, str]: ...


def apply_verdict(board: Scoreboard, verdict: Verdict, delta: int) -> Scoreboard:
    """Move ``delta`` points between questioner and respondent."""
    ids = set(board.agent_ids)
    if verdict.questioner not in ids or verdict.respondent not in ids:
        raise UnknownAgentError(f"verdict references unknown agent: {verdict.questioner}/{verdict.respondent}")
    sign = -1 if verdict.judgment is Judgment.UNSATISFACTORY else 1
    updated = {
        agent: score + (sign if agent == verdict.respondent else -sign) * delta
        for agent, score in board.scores
    }
    return Scoreboard(tuple(updated.items()))


def select_winner(board: Scoreboard) -> str | None:
    """The strictly higher-scored agent, or None on a tie."""
    (a, sa), (b, sb) = board.scores
    if sa > sb:
        return a
    if sb > sa:
        return b
    return None


def _guard(agent_id: str, call: Callable[[], object]):
    try:
        return call()
    except Exception as exc:  # backends surface as BackendError and friends
        raise AgentFailureError(agent_id, exc) from exc


def run_phase(
    plans: Mapping[str, Plan],
    agents: Mapping[str, DecisionAgentLike],
    expert: ExpertAgentLike,
    config: GameConfig,
    board: Scoreboard,
    *,
    phase: int = 1,
    transcript: Transcript | None = None,
    exchange_offset: int = 0,
) -> tuple[Scoreboard, tuple[TranscriptEvent, ...]]:
    """Play one phase (``rounds_per_phase`` rounds, two exchanges each).

    Returns the updated board and the events appended for this phase.
    ``exchange_offset`` carries the global exchange counter across phases
    so scripted experts consume their verdict scripts in order.
    """
    transcript = transcript if transcript is not None else Transcript()
    ids = sorted(agents)
    if len(ids) != 2 or set(ids) != set(plans):
        raise ValueError("exactly two agents with matching proposals are required")
    first = ids[0] if phase % 2 == 1 else ids[1]
    second = ids[1] if first == ids[0] else ids[0]

    start = len(transcript.events)
    exchange = exchange_offset
    for round_i in range(1, config.rounds_per_phase + 1):
        for questioner in (first, second):
            respondent = second if questioner == first else first
            question = _guard(
                questioner,
                lambda q=questioner, r=respondent: agents[q].pose_question(
                    plans[q], plans[r], transcript.events
                ),
            )
            transcript.append(
                tr.QUESTION,
                {"text": question, "to": respondent, "exchange_index": exchange},
                phase=phase, round=round_i, agent=questioner,
            )
            answer = _guard(
                respondent,
                lambda q=question, r=respondent: agents[r].answer_question(q, plans[r]),
            )
            transcript.append(
                tr.ANSWER,
                {"text": answer, "to": questioner, "exchange_index": exchange},
                phase=phase, round=round_i, agent=respondent,
            )
            judgment, rationale = _guard(
                "expert",
                lambda q=question, a=answer: expert.judge_exchange(q, a, plans, transcript.events),
            )
            verdict = Verdict(
                exchange_index=exchange,
                questioner=questioner,
                respondent=respondent,
                judgment=judgment,
                rationale=rationale,
            )
            board = apply_verdict(board, verdict, config.point_delta)
            transcript.append(
                tr.VERDICT,
                {
                    "exchange_index": exchange,
                    "questioner": questioner,
                    "respondent": respondent,
                    "judgment": judgment.value,
                    "rationale": rationale,
                    "point_delta": config.point_delta,
                },
                phase=phase, round=round_i,
            )
            transcript.append(
                tr.SCORE_UPDATE,
                {"scores": board.as_dict(), "exchange_index": exchange},
                phase=phase, round=round_i,
            )
            exchange += 1
    return board, transcript.events[start:]


def run_game(
    proposals: Mapping[str, Plan],
    agents: Mapping[str, DecisionAgentLike],
    expert: ExpertAgentLike,
    config: GameConfig = GameConfig(),
    *,
    synonyms: SynonymTable = EMPTY_SYNONYMS,
    transcript: Transcript | None = None,
) -> GameOutcome:
    """Arbitrate two proposals end to end and return the outcome.

    Raises :class:`InvalidProposalError` for proposals that fail plan
    validation and propagates :class:`AgentFailureError` from backends.
    """
    transcript = transcript if transcript is not None else Transcript()
    ids = sorted(proposals)
    if len(ids) != 2 or sorted(agents) != ids:
        raise ValueError("exactly two proposing agents are required")

    for agent_id in ids:
        plan = proposals[agent_id]
        report = validate_plan(plan)
        if not plan.actions or not report.ok:
            raise InvalidProposalError(agent_id, report)
        transcript.append(
            tr.PROPOSAL, {"plan": render_plan(plan)}, phase=0, round=0, agent=agent_id
        )

    result = _guard(
        "expert",
        lambda: expert.check_consistency(proposals[ids[0]], proposals[ids[1]], synonyms),
    )
    transcript.append(
        tr.CONSISTENCY_RESULT,
        {"consistent": bool(result.consistent), "rationale": result.rationale},
        phase=0, round=0,
    )

    board = Scoreboard.zero(ids)
    if result.consistent:
        winner = ids[0]
        outcome = GameOutcome(winner, proposals[winner], board, 0, Resolution.CONSISTENT, transcript)
        _append_winner(transcript, outcome)
        return outcome

    phases_played = 0
    exchange_offset = 0
    winner: str | None = None
    for phase in range(1, config.max_tiebreak_phases + 1):
        board, _ = run_phase(
            proposals, agents, expert, config, board,
            phase=phase, transcript=transcript, exchange_offset=exchange_offset,
        )
        exchange_offset += config.rounds_per_phase * 2
        phases_played = phase
        winner = select_winner(board)
        if winner is not None:
            break

    if winner is not None:
        resolution = Resolution.SCORE_DECIDED
    else:
        resolution = Resolution.FORCED_TIEBREAK
        winner = ids[0]
        transcript.append(
            tr.WARNING,
            {
                "message": "tie persisted through the phase cap; first agent id wins by rule",
                "phases_played": phases_played,
            },
            phase=phases_played, round=0,
        )
    outcome = GameOutcome(winner, proposals[winner], board, phases_played, resolution, transcript)
    _append_winner(transcript, outcome)
    return outcome


def _append_winner(transcript: Transcript, outcome: GameOutcome) -> None:
    transcript.append(
        tr.WINNER_SELECTED,
        {
            "winner": outcome.winner,
            "resolution": outcome.resolution.value,
            "final_scores": outcome.final_scores.as_dict(),
            "phases_played": outcome.phases_played,
        },
        phase=outcome.phases_played, round=0,
    )


# ---------------------------------------------------------------------------
# Transcript replay verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayCheck:
    ok: bool
    reason: str = ""
    divergent_seq: int | None = None


def verify_events(events: Sequence[TranscriptEvent]) -> ReplayCheck:
    """Refold verdict events and confirm every score the transcript claims.

    Each ``score_update`` must match the running fold exactly, and the
    ``winner_selected`` event (when present) must agree on final scores
    and on the winner implied by them.
    """
    agent_ids = sorted({e.agent for e in events if e.kind == tr.PROPOSAL and e.agent})
    board: Scoreboard | None = Scoreboard.zero(agent_ids) if len(agent_ids) == 2 else None

    for event in events:
        if event.kind == tr.VERDICT:
            if board is None:
                return ReplayCheck(False, "verdict before two proposals", event.seq)
            try:
                verdict = Verdict(
                    exchange_index=int(event.payload["exchange_index"]),
                    questioner=str(event.payload["questioner"]),
                    respondent=str(event.payload["respondent"]),
                    judgment=Judgment(event.payload["judgment"]),
                    rationale=str(event.payload.get("rationale", "")),
                )
                delta = int(event.payload["point_delta"])
                board = apply_verdict(board, verdict, delta)
            except (KeyError, ValueError, UnknownAgentError) as exc:
                return ReplayCheck(False, f"malformed verdict: {exc}", event.seq)
        elif event.kind == tr.SCORE_UPDATE:
            if board is None:
                return ReplayCheck(False, "score update before two proposals", event.seq)
            claimed = {str(k): int(v) for k, v in dict(event.payload.get("scores", {})).items()}
            if claimed != board.as_dict():
                return ReplayCheck(
                    False,
                    f"score update claims {claimed}, replay gives {board.as_dict()}",
                    event.seq,
                )
        elif event.kind == tr.WINNER_SELECTED:
            if board is None:
                return ReplayCheck(False, "winner before two proposals", event.seq)
            claimed = {str(k): int(v) for k, v in dict(event.payload.get("final_scores", {})).items()}
            if claimed != board.as_dict():
                return ReplayCheck(
                    False,
                    f"final scores claim {claimed}, replay gives {board.as_dict()}",
                    event.seq,
                )
            winner = str(event.payload.get("winner", ""))
            implied = select_winner(board)
            if implied is None:
                # consistent outcomes and forced tiebreaks fall to the first id
                if winner != board.agent_ids[0]:
                    return ReplayCheck(False, f"tied scores but winner {winner}", event.seq)
            elif winner != implied:
                return ReplayCheck(False, f"scores imply {implied}, transcript says {winner}", event.seq)
    return ReplayCheck(True)

from __future__ import annotations

import itertools
import random

import pytest

from gamevlm.agents import DecisionAgent, ExpertAgent, ScriptedBackend
from gamevlm.dsl import parse_plan
from gamevlm.game import (
    AgentFailureError,
    GameConfig,
    InvalidProposalError,
    Judgment,
    Resolution,
    Scoreboard,
    UnknownAgentError,
    Verdict,
    apply_verdict,
    run_game,
    run_phase,
    select_winner,
    verify_events,
)
from gamevlm.transcript import SCORE_UPDATE, VERDICT, Transcript

A, B = "agent_a", "agent_b"


def board(a: int = 0, b: int = 0) -> Scoreboard:
    return Scoreboard(((A, a), (B, b)))


# ---------------------------------------------------------------------------
# Fold oracle: independent score accounting
# ---------------------------------------------------------------------------


def oracle_fold(verdicts: list[tuple[str, str, str]], delta: int = 10) -> dict[str, int]:
    """(questioner, respondent, 'S'|'U') triples folded by hand."""
    scores = {A: 0, B: 0}
    for questioner, respondent, judgment in verdicts:
        if judgment == "U":
            scores[respondent] -= delta
            scores[questioner] += delta
        else:
            scores[respondent] += delta
            scores[questioner] -= delta
    return scores


def fold_with_apply(verdicts: list[tuple[str, str, str]], delta: int = 10) -> dict[str, int]:
    b = board()
    for i, (q, r, j) in enumerate(verdicts):
        judgment = Judgment.UNSATISFACTORY if j == "U" else Judgment.SATISFACTORY
        b = apply_verdict(b, Verdict(i, q, r, judgment), delta)
    return b.as_dict()


# ---------------------------------------------------------------------------
# Scoreboard / apply_verdict
# ---------------------------------------------------------------------------


def test_scoreboard_requires_two_agents_and_zero_sum():
    with pytest.raises(ValueError):
        Scoreboard(((A, 5),))
    with pytest.raises(ValueError):
        Scoreboard(((A, 10), (B, 10)))


def test_unsatisfactory_moves_points_to_questioner():
    updated = apply_verdict(board(), Verdict(0, A, B, Judgment.UNSATISFACTORY), 10)
    assert updated.as_dict() == {A: 10, B: -10}


def test_satisfactory_rewards_respondent():
    updated = apply_verdict(board(), Verdict(0, A, B, Judgment.SATISFACTORY), 10)
    assert updated.as_dict() == {A: -10, B: 10}


def test_fold_example_from_contract():
    # questioner in parens: Unsat(B), Sat(A), Unsat(A) -> (A:-10, B:+10)
    verdicts = [(B, A, "U"), (A, B, "S"), (A, B, "U")]
    assert fold_with_apply(verdicts) == {A: -10, B: 10}
    assert oracle_fold(verdicts) == {A: -10, B: 10}


def test_fold_matches_oracle_all_sequences_up_to_len_4():
    options = [(A, B, "U"), (A, B, "S"), (B, A, "U"), (B, A, "S")]
    for n in range(5):
        for seq in itertools.product(options, repeat=n):
            assert fold_with_apply(list(seq)) == oracle_fold(list(seq))


def test_apply_verdict_unknown_agent():
    with pytest.raises(UnknownAgentError):
        apply_verdict(board(), Verdict(0, A, "stranger", Judgment.SATISFACTORY), 10)


def test_zero_sum_conservation_random_sequences():
    rng = random.Random(42)
    for _ in range(500):
        b = board()
        for i in range(rng.randint(1, 30)):
            q, r = (A, B) if rng.random() < 0.5 else (B, A)
            j = Judgment.SATISFACTORY if rng.random() < 0.5 else Judgment.UNSATISFACTORY
            b = apply_verdict(b, Verdict(i, q, r, j), 10)
            assert sum(b.as_dict().values()) == 0
            assert all(s % 10 == 0 for s in b.as_dict().values())


def test_select_winner():
    assert select_winner(board(20, -20)) == A
    assert select_winner(board()) is None
    assert select_winner(board(-10, 10)) == B


# ---------------------------------------------------------------------------
# Scripted actors
# ---------------------------------------------------------------------------


def agents_pair() -> dict[str, DecisionAgent]:
    return {
        A: DecisionAgent(A, ScriptedBackend()),
        B: DecisionAgent(B, ScriptedBackend()),
    }


def scripted_expert(verdicts: tuple[str, ...], consistent: bool = False) -> ExpertAgent:
    return ExpertAgent(ScriptedBackend(consistency=consistent, verdicts=verdicts))


PLAN_A = parse_plan("pick(apple); place_on(plate)")
PLAN_B = parse_plan("pick(apple); place_on(box)")


def test_run_phase_one_sided_sweep():
    # B's answers all unsatisfactory, A's all satisfactory -> A +60 / B -60
    updated, events = run_phase(
        {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(("U", "S")),
        GameConfig(), board(),
    )
    assert updated.as_dict() == {A: 60, B: -60}
    assert len([e for e in events if e.kind == VERDICT]) == 6


def test_run_phase_all_satisfactory_is_a_tie():
    updated, _ = run_phase(
        {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(("S",)),
        GameConfig(), board(),
    )
    assert updated.as_dict() == {A: 0, B: 0}


def test_run_phase_single_round_symmetric():
    updated, events = run_phase(
        {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(("S",)),
        GameConfig(rounds_per_phase=1), board(),
    )
    assert updated.as_dict() == {A: 0, B: 0}
    assert len([e for e in events if e.kind == VERDICT]) == 2


def test_run_phase_question_order_alternates_within_round():
    _, events = run_phase(
        {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(("S",)),
        GameConfig(), board(), phase=1,
    )
    questioners = [e.agent for e in events if e.kind == "question"]
    assert questioners == [A, B, A, B, A, B]
    # phase 2 opens with the other agent
    _, events2 = run_phase(
        {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(("S",)),
        GameConfig(), board(), phase=2,
    )
    assert [e.agent for e in events2 if e.kind == "question"] == [B, A, B, A, B, A]


def test_run_phase_backend_failure_wraps_agent_id():
    failing_expert = ExpertAgent(ScriptedBackend(consistency=False, verdicts=(), cycle=False))
    with pytest.raises(AgentFailureError) as err:
        run_phase({A: PLAN_A, B: PLAN_B}, agents_pair(), failing_expert, GameConfig(), board())
    assert err.value.agent_id == "expert"


# ---------------------------------------------------------------------------
# run_game
# ---------------------------------------------------------------------------


def test_run_game_consistent_proposals_skip_the_game():
    outcome = run_game(
        {A: PLAN_A, B: parse_plan("pick(apple); place_on(plate)")},
        agents_pair(), scripted_expert((), consistent=True),
    )
    assert outcome.resolution is Resolution.CONSISTENT
    assert outcome.phases_played == 0
    assert outcome.winner == A
    assert outcome.final_scores.as_dict() == {A: 0, B: 0}


def test_run_game_score_decided_after_one_phase():
    # verdict order [U,S,S,S,U,U] folds to (A:+20, B:-20)
    expected = oracle_fold([(A, B, "U"), (B, A, "S"), (A, B, "S"), (B, A, "S"), (A, B, "U"), (B, A, "U")])
    assert expected == {A: 20, B: -20}
    outcome = run_game(
        {A: PLAN_A, B: PLAN_B}, agents_pair(),
        scripted_expert(("U", "S", "S", "S", "U", "U"), consistent=False),
    )
    assert outcome.resolution is Resolution.SCORE_DECIDED
    assert outcome.winner == A
    assert outcome.phases_played == 1
    assert outcome.final_scores.as_dict() == expected
    assert outcome.winning_plan is PLAN_A


def test_run_game_forced_tiebreak_at_phase_cap():
    outcome = run_game(
        {A: PLAN_A, B: PLAN_B}, agents_pair(),
        scripted_expert(("S",), consistent=False),
        GameConfig(max_tiebreak_phases=3),
    )
    assert outcome.resolution is Resolution.FORCED_TIEBREAK
    assert outcome.phases_played == 3
    assert outcome.winner == A
    warnings = outcome.transcript.of_kind("warning")
    assert len(warnings) == 1


def test_run_game_rejects_invalid_proposal():
    with pytest.raises(InvalidProposalError):
        run_game(
            {A: parse_plan("place_on(plate)"), B: PLAN_B},
            agents_pair(), scripted_expert(("S",)),
        )


def test_run_game_termination_bound():
    config = GameConfig(rounds_per_phase=2, max_tiebreak_phases=4)
    outcome = run_game(
        {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(("S",), consistent=False), config
    )
    exchanges = len(outcome.transcript.of_kind(VERDICT))
    assert exchanges <= config.max_tiebreak_phases * config.rounds_per_phase * 2


def test_exhaustive_judgment_patterns_match_fold_oracle():
    """All 2^6 verdict patterns for one default phase, both phase parities."""
    for phase in (1, 2):
        first, second = (A, B) if phase == 1 else (B, A)
        for bits in itertools.product("US", repeat=6):
            updated, _ = run_phase(
                {A: PLAN_A, B: PLAN_B}, agents_pair(), scripted_expert(tuple(bits)),
                GameConfig(), board(), phase=phase,
            )
            triples = []
            for i, j in enumerate(bits):
                q = first if i % 2 == 0 else second
                r = second if q == first else first
                triples.append((q, r, j))
            assert updated.as_dict() == oracle_fold(triples)


def test_winner_monotonicity():
    """One more unsatisfactory answer from the loser never flips the winner."""
    rng = random.Random(9)
    for _ in range(300):
        b = board()
        for i in range(rng.randint(1, 12)):
            q, r = (A, B) if rng.random() < 0.5 else (B, A)
            j = Judgment.SATISFACTORY if rng.random() < 0.5 else Judgment.UNSATISFACTORY
            b = apply_verdict(b, Verdict(i, q, r, j), 10)
        winner = select_winner(b)
        if winner is None:
            continue
        loser = B if winner == A else A
        widened = apply_verdict(b, Verdict(99, winner, loser, Judgment.UNSATISFACTORY), 10)
        assert select_winner(widened) == winner


# ---------------------------------------------------------------------------
# Transcript soundness and replay
# ---------------------------------------------------------------------------


def test_transcript_score_updates_replay_to_final():
    outcome = run_game(
        {A: PLAN_A, B: PLAN_B}, agents_pair(),
        scripted_expert(("U", "S", "U", "U", "S", "S"), consistent=False),
    )
    b = board()
    for event in outcome.transcript.of_kind(VERDICT):
        v = Verdict(
            event.payload["exchange_index"],
            event.payload["questioner"],
            event.payload["respondent"],
            Judgment(event.payload["judgment"]),
        )
        b = apply_verdict(b, v, event.payload["point_delta"])
    assert b.as_dict() == outcome.final_scores.as_dict()
    assert verify_events(outcome.transcript.events).ok


def test_verify_events_catches_tampered_score():
    outcome = run_game(
        {A: PLAN_A, B: PLAN_B}, agents_pair(),
        scripted_expert(("U", "S"), consistent=False),
    )
    tampered = []
    broken_seq = None
    for event in outcome.transcript.events:
        if event.kind == SCORE_UPDATE and broken_seq is None:
            payload = dict(event.payload)
            scores = dict(payload["scores"])
            scores[A] += 10
            payload["scores"] = scores
            broken_seq = event.seq
            event = type(event)(event.seq, event.phase, event.round, event.kind, payload, event.ts, event.agent)
        tampered.append(event)
    check = verify_events(tampered)
    assert not check.ok
    assert check.divergent_seq == broken_seq


def test_scripted_games_are_deterministic():
    from gamevlm.transcript import canonical_lines

    def play() -> list[str]:
        outcome = run_game(
            {A: PLAN_A, B: PLAN_B}, agents_pair(),
            scripted_expert(("U", "S", "S"), consistent=False),
            transcript=Transcript(clock=lambda: 0.0),
        )
        return canonical_lines(outcome.transcript)

    assert play() == play()

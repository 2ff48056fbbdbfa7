"""Two agents disagree; the zero-sum question-and-answer game decides.

Each round both agents question each other once, the expert judges every
answer, and ten points move per verdict. The higher score wins the right
to execute. Here the expert's verdict script favors agent_a.

Run:  python demos/02_arbitration_game.py
"""

from gamevlm import DecisionAgent, ExpertAgent, ScriptedBackend, parse_plan, run_game
from gamevlm.game import GameConfig

proposals = {
    "agent_a": parse_plan("pick(apple); place_on(plate)"),
    "agent_b": parse_plan("pick(apple); place_on(storage_box)"),
}
agents = {
    "agent_a": DecisionAgent("agent_a", ScriptedBackend()),  # built-in questioning strategy
    "agent_b": DecisionAgent("agent_b", ScriptedBackend()),
}
# consistency=False: the plans differ, so the game is played.
# Verdicts alternate U,S: agent_b's answers are unsatisfactory, agent_a's fine.
expert = ExpertAgent(ScriptedBackend(consistency=False, verdicts=("U", "S")))

outcome = run_game(proposals, agents, expert, GameConfig())
print("resolution:", outcome.resolution.value)
print("winner:", outcome.winner)
print("final scores:", outcome.final_scores.as_dict())
print("plan sent to the robot:", outcome.winning_plan.source_text)
print()

# The transcript is an append-only audit log; every score step is replayable.
for event in outcome.transcript.events:
    if event.kind in ("question", "answer"):
        print(f"[phase {event.phase} round {event.round}] {event.agent}: {event.payload['text'][:72]}")
    elif event.kind == "verdict":
        print(f"    expert: {event.payload['judgment']}")

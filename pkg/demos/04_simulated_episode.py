"""One full episode: multi-modal input, proposals, arbitration, execution.

The "imitate the behavior" task feeds the agents eight rendered video
frames of an apple gliding onto a plate. Scripted agents stand in for
remote models; one proposes the right plan, one a lookalike mistake.

Run:  python demos/04_simulated_episode.py
"""

from gamevlm import DecisionAgent, ExpertAgent, ScriptedBackend, TaskId, task_spec
from gamevlm.fixtures import wrap_plan_reply
from gamevlm.simulator import run_episode
from gamevlm.tasks import build_scene, build_task_input

spec = task_spec(TaskId.TASK5)
scene = build_scene(TaskId.TASK5)
print("instruction:", spec.instruction)
print("criteria:", sorted(c.value for c in spec.criteria), "| difficulty:", spec.difficulty.value)

frames = build_task_input(spec, scene)
print(f"input: {len(frames.images)} video frames ({len(frames.images[0])} bytes each)")

agents = {
    "agent_a": DecisionAgent("agent_a", ScriptedBackend(
        proposals=(wrap_plan_reply("pick(apple); place_on(plate)"),))),
    "agent_b": DecisionAgent("agent_b", ScriptedBackend(
        proposals=(wrap_plan_reply("pick(banana); place_on(plate)"),))),
}
expert = ExpertAgent(ScriptedBackend(consistency=False, verdicts=("U", "S")))

result = run_episode(spec, scene, agents, expert)
print()
print("game winner:", result.game.winner, "| resolution:", result.game.resolution.value)
print("episode outcome:", result.outcome.value)
print("final world:")
for row in result.world_key[0]:
    print("   ", row)

"""The plan language: parsing, validation, and when two plans "agree".

Run:  python demos/01_plan_language.py
"""

from gamevlm import SynonymTable, parse_plan, plans_equivalent, render_plan, validate_plan
from gamevlm.dsl import PlanSyntaxError

# Plans are flat sequences of primitive calls separated by ';'.
plan = parse_plan("pick(red apple); place_on(plate); move_home()")
print("parsed:", [type(a).__name__ for a in plan.actions])
print("canonical text:", render_plan(plan))  # labels come out normalized

# The parser reports positions for malformed input.
try:
    parse_plan("pick(apple); place_on(")
except PlanSyntaxError as err:
    print(f"syntax error at line {err.line}, column {err.column}: expected {err.expected}")

# validate_plan walks the held-object protocol: you cannot place with an
# empty gripper or pick while already holding something.
report = validate_plan(parse_plan("place_on(plate); pick(a); pick(b)"))
for violation in report.violations:
    print(f"violation at step {violation.index}: {violation.kind}")

# Equivalence is canonical-sequence equality: synonyms collapse and
# move_home() is ignored (it moves the arm, not the world).
synonyms = SynonymTable.from_dict({"red_apple": "apple"})
a = parse_plan("pick(red_apple); place_on(plate)")
b = parse_plan("move_home(); pick(apple); place_on(plate)")
print("equivalent:", plans_equivalent(a, b, synonyms))

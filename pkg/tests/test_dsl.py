from __future__ import annotations

import itertools
import random

import pytest

from gamevlm.dsl import (
    EmptyLabelError,
    EmptyPlanError,
    MoveHome,
    Pick,
    PlaceAt,
    PlaceOn,
    Plan,
    PlanSyntaxError,
    Stack,
    SynonymTable,
    canonical_actions,
    normalize_label,
    parse_plan,
    plans_equivalent,
    render_plan,
    validate_plan,
)

# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def oracle_normalize(raw: str) -> str | None:
    """Character-by-character reference normalizer; None means empty."""
    out: list[str] = []
    pending_sep = False
    for ch in raw.lower():
        if ch.isalnum():
            if pending_sep and out:
                out.append("_")
            out.append(ch)
            pending_sep = False
        else:
            pending_sep = True
    return "".join(out) or None


def oracle_canonical(plan: Plan, synonyms: dict[str, str]) -> tuple:
    """Reference canonicalization: iterative synonym substitution to a
    fixpoint, move_home dropped, labels re-normalized."""

    def canon(label: str) -> str:
        cur = oracle_normalize(label)
        for _ in range(100):
            nxt = synonyms.get(cur, cur)
            if nxt == cur:
                return cur
            cur = nxt
        raise RuntimeError("synonym chain too deep")

    rows = []
    for action in plan.actions:
        if isinstance(action, MoveHome):
            continue
        if isinstance(action, Pick):
            rows.append(("pick", canon(action.target)))
        elif isinstance(action, PlaceOn):
            rows.append(("place_on", canon(action.target)))
        elif isinstance(action, PlaceAt):
            rows.append(("place_at", tuple(int(round(v * 1000)) for v in action.position)))
        elif isinstance(action, Stack):
            rows.append(("stack", canon(action.top), canon(action.bottom)))
    return tuple(rows)


# ---------------------------------------------------------------------------
# normalize_label
# ---------------------------------------------------------------------------


def test_normalize_synonym_forms_match():
    assert normalize_label("red apple") == "red_apple"


def test_normalize_already_canonical():
    assert normalize_label("apple") == "apple"


def test_normalize_messy_input():
    assert normalize_label("  Red--Apple ") == "red_apple"


def test_normalize_empty_raises():
    with pytest.raises(EmptyLabelError):
        normalize_label("  -- _ ")


def test_normalize_exhaustive_against_oracle():
    # every string of length <= 4 over {a, A, space, -}
    alphabet = ["a", "A", " ", "-"]
    for n in range(5):
        for chars in itertools.product(alphabet, repeat=n):
            raw = "".join(chars)
            expected = oracle_normalize(raw)
            if expected is None:
                with pytest.raises(EmptyLabelError):
                    normalize_label(raw)
            else:
                assert normalize_label(raw) == expected


def test_normalize_idempotent():
    rng = random.Random(7)
    pool = "abcXYZ019 _--  !.#"
    for _ in range(500):
        raw = "".join(rng.choice(pool) for _ in range(rng.randint(1, 12)))
        try:
            once = normalize_label(raw)
        except EmptyLabelError:
            continue
        assert normalize_label(once) == once


# ---------------------------------------------------------------------------
# parse_plan / render_plan
# ---------------------------------------------------------------------------


def test_parse_pick_place():
    plan = parse_plan("pick(kiwifruit); place_on(plate)")
    assert plan.actions == (Pick("kiwifruit"), PlaceOn("plate"))
    assert plan.source_text == "pick(kiwifruit); place_on(plate)"


def test_parse_stack():
    plan = parse_plan("stack(yellow_block, red_block)")
    assert plan.actions == (Stack("yellow_block", "red_block"),)


def test_parse_unclosed_argument():
    with pytest.raises(PlanSyntaxError) as err:
        parse_plan("pick(apple); place_on(")
    assert err.value.line == 1
    assert err.value.column == len("pick(apple); place_on(") + 1


def test_parse_spaces_inside_identifiers():
    assert parse_plan("pick( red apple )").actions == (Pick("red_apple"),)


def test_parse_trailing_semicolon():
    assert parse_plan("move_home();").actions == (MoveHome(),)


def test_parse_place_at_millimeters():
    plan = parse_plan("place_at(300, 200)")
    assert plan.actions == (PlaceAt((0.3, 0.2, 0.0)),)
    assert parse_plan("place_at(300, 200, 50)").actions == (PlaceAt((0.3, 0.2, 0.05)),)


def test_parse_place_at_rejects_non_integer():
    with pytest.raises(PlanSyntaxError):
        parse_plan("place_at(a, 200)")


def test_parse_unknown_verb():
    with pytest.raises(PlanSyntaxError) as err:
        parse_plan("launch(apple)")
    assert "pick" in err.value.expected


def test_parse_bad_arity():
    with pytest.raises(PlanSyntaxError):
        parse_plan("pick(apple, pear)")
    with pytest.raises(PlanSyntaxError):
        parse_plan("stack(apple)")
    with pytest.raises(PlanSyntaxError):
        parse_plan("move_home(apple)")


def test_parse_empty_plan():
    with pytest.raises(EmptyPlanError):
        parse_plan("")
    with pytest.raises(EmptyPlanError):
        parse_plan("   \n  ")


def test_parse_stray_character_position():
    with pytest.raises(PlanSyntaxError) as err:
        parse_plan("pick(apple);\npick(*)")
    assert err.value.line == 2
    assert err.value.column == 6


def test_parse_stack_onto_itself():
    with pytest.raises(PlanSyntaxError):
        parse_plan("stack(apple, apple)")


def _random_plan_text(rng: random.Random) -> str:
    stmts = []
    labels = ["apple", "red apple", "Blue-Block", "plate"]
    for _ in range(rng.randint(1, 5)):
        kind = rng.randrange(5)
        if kind == 0:
            stmts.append(f"pick({rng.choice(labels)})")
        elif kind == 1:
            stmts.append(f"place_on({rng.choice(labels)})")
        elif kind == 2:
            stmts.append(f"place_at({rng.randrange(1000)}, {rng.randrange(1000)}, {rng.randrange(100)})")
        elif kind == 3:
            a, b = rng.sample(labels, 2)
            stmts.append(f"stack({a}, {b})")
        else:
            stmts.append("move_home()")
    return "; ".join(stmts)


def test_parse_render_round_trip():
    rng = random.Random(11)
    for _ in range(300):
        plan = parse_plan(_random_plan_text(rng))
        rendered = render_plan(plan)
        assert parse_plan(rendered).actions == plan.actions
        # canonical printer is a fixpoint
        assert render_plan(parse_plan(rendered)) == rendered


# ---------------------------------------------------------------------------
# validate_plan
# ---------------------------------------------------------------------------


def test_validate_pick_then_place_ok():
    report = validate_plan(parse_plan("pick(apple); place_on(plate)"))
    assert report.ok


def test_validate_place_while_empty():
    report = validate_plan(parse_plan("place_on(plate)"))
    assert [(v.index, v.kind) for v in report.violations] == [(0, "place_while_empty")]


def test_validate_pick_while_holding():
    report = validate_plan(parse_plan("pick(a); pick(b)"))
    assert [(v.index, v.kind) for v in report.violations] == [(1, "pick_while_holding")]


def test_validate_move_home_neutral():
    assert validate_plan(parse_plan("pick(a); move_home(); place_on(b)")).ok


def test_validate_reports_every_violation():
    report = validate_plan(parse_plan("place_on(a); pick(b); pick(c); place_on(d); place_at(10, 10)"))
    assert [(v.index, v.kind) for v in report.violations] == [
        (0, "place_while_empty"),
        (2, "pick_while_holding"),
        (4, "place_while_empty"),
    ]


# ---------------------------------------------------------------------------
# Synonyms and equivalence
# ---------------------------------------------------------------------------


def test_synonym_table_normalizes_and_flattens():
    table = SynonymTable.from_dict({"Red Apple": "apple", "crimson-apple": "red apple"})
    assert table.canonical("crimson_apple") == "apple"
    assert table.canonical("red_apple") == "apple"
    assert table.canonical("pear") == "pear"


def test_synonym_cycle_rejected():
    with pytest.raises(ValueError):
        SynonymTable.from_dict({"a": "b", "b": "a"})


def test_equivalence_reflexive_on_identical_plans():
    plan = parse_plan("pick(apple); place_on(plate)")
    assert plans_equivalent(plan, plan)


def test_equivalence_synonym_example():
    table = SynonymTable.from_dict({"red_apple": "apple"})
    a = parse_plan("pick(red_apple)")
    b = parse_plan("pick(apple)")
    assert plans_equivalent(a, b, table)
    assert oracle_canonical(a, table.as_dict()) == oracle_canonical(b, table.as_dict())


def test_equivalence_differing_targets():
    assert not plans_equivalent(parse_plan("pick(a); place_on(b)"), parse_plan("pick(a); place_on(c)"))


def test_move_home_is_equivalence_noop():
    assert plans_equivalent(
        parse_plan("move_home(); pick(a); move_home()"), parse_plan("pick(a)")
    )


def enumerate_small_plans(labels: list[str], max_len: int) -> list[Plan]:
    """Every plan of 1..max_len actions over the label alphabet, plus
    move_home and one fixed place_at position."""
    atoms: list = [Pick(l) for l in labels]
    atoms += [PlaceOn(l) for l in labels]
    atoms += [Stack(t, b) for t in labels for b in labels if t != b]
    atoms.append(MoveHome())
    atoms.append(PlaceAt((0.1, 0.2, 0.0)))
    plans = []
    for n in range(1, max_len + 1):
        for combo in itertools.product(atoms, repeat=n):
            plans.append(Plan(actions=combo))
    return plans


def test_equivalence_relation_properties_small_space():
    """Partition by canonical key == partition by the oracle key, over the
    exhaustive small plan space; that is all-pairs agreement."""
    labels = ["a", "b"]
    table = SynonymTable.from_dict({"b": "a"})
    plans = enumerate_small_plans(labels, 2)
    for plan in plans:
        assert canonical_actions(plan, table) == oracle_canonical(plan, table.as_dict())
    # direct pairwise spot check, including symmetry
    rng = random.Random(3)
    for _ in range(2000):
        p, q = rng.choice(plans), rng.choice(plans)
        expected = oracle_canonical(p, table.as_dict()) == oracle_canonical(q, table.as_dict())
        assert plans_equivalent(p, q, table) == expected
        assert plans_equivalent(q, p, table) == expected


def test_equivalence_transitive_sample():
    labels = ["a", "b", "c"]
    table = SynonymTable.from_dict({"b": "a"})
    plans = enumerate_small_plans(labels, 2)
    rng = random.Random(5)
    for _ in range(3000):
        p, q, r = (rng.choice(plans) for _ in range(3))
        if plans_equivalent(p, q, table) and plans_equivalent(q, r, table):
            assert plans_equivalent(p, r, table)

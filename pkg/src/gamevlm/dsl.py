"""Robot action plan DSL: parsing, validation, and plan equivalence.

The plan language is a flat sequence of primitive calls:

    plan  := stmt (";" stmt)* [";"]
    stmt  := ident "(" args? ")"
    args  := ident ("," ident)*
    ident := [A-Za-z0-9 _-]+        (normalized on parse)

Whitespace is insignificant outside identifiers; spaces *inside* an
identifier are part of it and normalize to underscores, so
``pick(red apple)`` and ``pick(red_apple)`` parse identically.

Primitives:

    pick(<object>)               grasp an object by label
    place_on(<target>)           put the held object onto a target object
    place_at(<x>, <y>[, <z>])    put the held object down at integer
                                 millimeter table coordinates
    stack(<top>, <bottom>)       put the held block onto another block
    move_home()                  retract the arm; no effect on the world

``place_at`` coordinates are non-negative integer millimeters because the
identifier charset cannot carry decimal points or leading minus signs;
positions are stored in meters and rendered back as millimeters.

Agent replies embed a plan between a line reading ``PLAN:`` and a line
reading ``END_PLAN`` (see :mod:`gamevlm.agents`); everything outside the
block is rationale text.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

__all__ = [
    "EmptyLabelError",
    "EmptyPlanError",
    "PlanSyntaxError",
    "normalize_label",
    "Pick",
    "PlaceOn",
    "PlaceAt",
    "Stack",
    "MoveHome",
    "Action",
    "Plan",
    "parse_plan",
    "render_action",
    "render_plan",
    "PlanViolation",
    "ValidationReport",
    "validate_plan",
    "SynonymTable",
    "canonical_actions",
    "plans_equivalent",
]

_CANONICAL_LABEL = re.compile(r"[a-z0-9]+(_[a-z0-9]+)*$")
_SEPARATOR_RUN = re.compile(r"[^a-z0-9]+")


class EmptyLabelError(ValueError):
    """Raised when label normalization leaves nothing behind."""


class EmptyPlanError(ValueError):
    """Raised when a plan text contains no statements."""


class PlanSyntaxError(ValueError):
    """Malformed plan text, with 1-based position and what was expected."""

    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        detail = f", found {found!r}" if found else ""
        super().__init__(f"line {line}, column {column}: expected {expected}{detail}")


def normalize_label(raw: str) -> str:
    """Canonicalize a label: lowercase, separator runs collapsed to ``_``.

    Spaces, hyphens, and any other non-alphanumeric characters count as
    separators; leading/trailing separators are stripped. Idempotent.
    """
    collapsed = _SEPARATOR_RUN.sub("_", raw.lower()).strip("_")
    if not collapsed:
        raise EmptyLabelError(f"label {raw!r} is empty after normalization")
    return collapsed


@dataclass(frozen=True)
class Pick:
    target: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", normalize_label(self.target))


@dataclass(frozen=True)
class PlaceOn:
    target: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", normalize_label(self.target))


@dataclass(frozen=True)
class PlaceAt:
    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise ValueError(f"position must be 3 finite coordinates, got {self.position!r}")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class Stack:
    top: str
    bottom: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "top", normalize_label(self.top))
        object.__setattr__(self, "bottom", normalize_label(self.bottom))
        if self.top == self.bottom:
            raise ValueError(f"cannot stack {self.top!r} onto itself")


@dataclass(frozen=True)
class MoveHome:
    pass


Action = Pick | PlaceOn | PlaceAt | Stack | MoveHome


@dataclass(frozen=True)
class Plan:
    """Ordered action sequence plus the verbatim text it came from."""

    actions: tuple[Action, ...]
    source_text: str = ""


# ---------------------------------------------------------------------------
# Scanner / parser
# ---------------------------------------------------------------------------

_IDENT_CHARS = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789 _-"
)
_PUNCT = frozenset("();,")


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | "(" | ")" | "," | ";" | "eof"
    text: str
    line: int
    column: int


def _scan(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
        elif ch in _IDENT_CHARS:
            start_line, start_col = line, col
            j = i
            while j < n and text[j] in _IDENT_CHARS:
                j += 1
            chunk = text[i:j]
            stripped = chunk.strip()
            if stripped:
                # report the position of the first non-blank character
                lead = len(chunk) - len(chunk.lstrip())
                tokens.append(_Token("ident", stripped, start_line, start_col + lead))
            col += j - i
            i = j
        elif ch == "\n":
            i += 1
            line += 1
            col = 1
        elif ch in "\t\r\f\v":
            i += 1
            col += 1
        else:
            raise PlanSyntaxError(line, col, "identifier or punctuation", ch)
    tokens.append(_Token("eof", "", line, col))
    return tokens


_VERBS = ("pick", "place_on", "place_at", "stack", "move_home")


def _build_action(verb_tok: _Token, args: list[_Token], close_tok: _Token) -> Action:
    verb = normalize_label(verb_tok.text)

    def arity_error(expected: str) -> PlanSyntaxError:
        return PlanSyntaxError(close_tok.line, close_tok.column, expected, ")")

    if verb == "pick":
        if len(args) != 1:
            raise arity_error("exactly one object label for pick")
        return Pick(args[0].text)
    if verb == "place_on":
        if len(args) != 1:
            raise arity_error("exactly one target label for place_on")
        return PlaceOn(args[0].text)
    if verb == "place_at":
        if len(args) not in (2, 3):
            raise arity_error("2 or 3 integer millimeter coordinates for place_at")
        mm: list[int] = []
        for tok in args:
            norm = normalize_label(tok.text)
            if not norm.isdigit():
                raise PlanSyntaxError(
                    tok.line, tok.column, "non-negative integer millimeter coordinate", tok.text
                )
            mm.append(int(norm))
        if len(mm) == 2:
            mm.append(0)
        return PlaceAt((mm[0] / 1000.0, mm[1] / 1000.0, mm[2] / 1000.0))
    if verb == "stack":
        if len(args) != 2:
            raise arity_error("exactly two labels (top, bottom) for stack")
        try:
            return Stack(args[0].text, args[1].text)
        except ValueError as exc:
            raise PlanSyntaxError(
                args[1].line, args[1].column, "a bottom label different from the top", args[1].text
            ) from exc
    if verb == "move_home":
        if args:
            raise arity_error("no arguments for move_home")
        return MoveHome()
    raise PlanSyntaxError(
        verb_tok.line, verb_tok.column, f"one of {', '.join(_VERBS)}", verb_tok.text
    )


def parse_plan(text: str) -> Plan:
    """Parse plan text into a :class:`Plan`; labels come out normalized.

    Raises :class:`EmptyPlanError` when no statements are present and
    :class:`PlanSyntaxError` (with line/column/expected) on malformed input.
    """
    tokens = _scan(text)
    if tokens[0].kind == "eof":
        raise EmptyPlanError("plan contains no statements")

    actions: list[Action] = []
    pos = 0

    def peek() -> _Token:
        return tokens[pos]

    def take(kind: str, expected: str) -> _Token:
        nonlocal pos
        tok = tokens[pos]
        if tok.kind != kind:
            raise PlanSyntaxError(tok.line, tok.column, expected, tok.text or "end of input")
        pos += 1
        return tok

    while True:
        verb = take("ident", "action name")
        take("(", "'('")
        args: list[_Token] = []
        if peek().kind == "ident":
            args.append(take("ident", "argument"))
            while peek().kind == ",":
                take(",", "','")
                args.append(take("ident", "argument after ','"))
        close = take(")", "argument or ')'")
        actions.append(_build_action(verb, args, close))
        if peek().kind == ";":
            take(";", "';'")
            if peek().kind == "eof":
                break
            continue
        take("eof", "';' or end of input")
        break

    if not actions:
        raise EmptyPlanError("plan contains no statements")
    return Plan(actions=tuple(actions), source_text=text)


def render_action(action: Action) -> str:
    if isinstance(action, Pick):
        return f"pick({action.target})"
    if isinstance(action, PlaceOn):
        return f"place_on({action.target})"
    if isinstance(action, PlaceAt):
        mm = [int(round(v * 1000.0)) for v in action.position]
        return f"place_at({mm[0]}, {mm[1]}, {mm[2]})"
    if isinstance(action, Stack):
        return f"stack({action.top}, {action.bottom})"
    if isinstance(action, MoveHome):
        return "move_home()"
    raise TypeError(f"not an action: {action!r}")


def render_plan(plan: Plan) -> str:
    """Canonical pretty-printer; ``parse_plan(render_plan(p))`` round-trips."""
    return "; ".join(render_action(a) for a in plan.actions)


# ---------------------------------------------------------------------------
# Held-object protocol validation
# ---------------------------------------------------------------------------

PICK_WHILE_HOLDING = "pick_while_holding"
PLACE_WHILE_EMPTY = "place_while_empty"


@dataclass(frozen=True)
class PlanViolation:
    index: int
    kind: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[PlanViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_plan(plan: Plan) -> ValidationReport:
    """Check the held-object protocol; violations are reported, not raised.

    A pick with the gripper full and a place/stack with the gripper empty
    are each flagged at their action index. The walk continues past
    violations (latest pick wins) so one pass reports them all.
    """
    violations: list[PlanViolation] = []
    held: str | None = None
    for i, action in enumerate(plan.actions):
        if isinstance(action, Pick):
            if held is not None:
                violations.append(
                    PlanViolation(i, PICK_WHILE_HOLDING, f"pick({action.target}) while holding {held}")
                )
            held = action.target
        elif isinstance(action, (PlaceOn, PlaceAt, Stack)):
            if held is None:
                violations.append(
                    PlanViolation(i, PLACE_WHILE_EMPTY, f"{render_action(action)} with nothing held")
                )
            held = None
        # MoveHome never touches the held object
    return ValidationReport(tuple(violations))


# ---------------------------------------------------------------------------
# Synonyms and the equivalence relation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynonymTable:
    """Label aliasing, e.g. ``{"red_apple": "apple"}``.

    Chains (a -> b -> c) are flattened at construction; cycles are
    rejected so ``canonical`` is a total function onto class
    representatives.
    """

    mapping: tuple[tuple[str, str], ...] = ()
    _resolved: dict[str, str] = field(init=False, repr=False, compare=False, hash=False, default_factory=dict)

    def __post_init__(self) -> None:
        raw = {normalize_label(k): normalize_label(v) for k, v in dict(self.mapping).items()}
        raw = {k: v for k, v in raw.items() if k != v}
        resolved: dict[str, str] = {}
        for start in raw:
            seen = [start]
            cur = start
            while cur in raw:
                cur = raw[cur]
                if cur in seen:
                    raise ValueError(f"synonym cycle: {' -> '.join(seen + [cur])}")
                seen.append(cur)
            resolved[start] = cur
        object.__setattr__(self, "mapping", tuple(sorted(raw.items())))
        object.__setattr__(self, "_resolved", resolved)

    @classmethod
    def from_dict(cls, mapping: dict[str, str]) -> "SynonymTable":
        return cls(tuple(mapping.items()))

    def canonical(self, label: str) -> str:
        norm = normalize_label(label)
        return self._resolved.get(norm, norm)

    def equivalent(self, a: str, b: str) -> bool:
        return self.canonical(a) == self.canonical(b)

    def as_dict(self) -> dict[str, str]:
        return dict(self.mapping)


EMPTY_SYNONYMS = SynonymTable()


def canonical_actions(plan: Plan, synonyms: SynonymTable = EMPTY_SYNONYMS) -> tuple[tuple, ...]:
    """Canonical comparison key: synonyms applied, move_home dropped.

    ``place_at`` positions are quantized to the DSL's millimeter
    resolution so parsed and programmatic plans compare consistently.
    """
    out: list[tuple] = []
    for action in plan.actions:
        if isinstance(action, MoveHome):
            continue
        if isinstance(action, Pick):
            out.append(("pick", synonyms.canonical(action.target)))
        elif isinstance(action, PlaceOn):
            out.append(("place_on", synonyms.canonical(action.target)))
        elif isinstance(action, PlaceAt):
            mm = tuple(int(round(v * 1000.0)) for v in action.position)
            out.append(("place_at", mm))
        elif isinstance(action, Stack):
            out.append(("stack", synonyms.canonical(action.top), synonyms.canonical(action.bottom)))
    return tuple(out)


def plans_equivalent(a: Plan, b: Plan, synonyms: SynonymTable = EMPTY_SYNONYMS) -> bool:
    """True iff the plans' canonical action sequences are identical."""
    return canonical_actions(a, synonyms) == canonical_actions(b, synonyms)

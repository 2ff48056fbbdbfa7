"""Benchmark aggregation: per-task and per-criteria success rates.

Rates are kept as exact-as-possible fractions in [0, 1] internally;
half-up rounding to one decimal of a percent happens only when a report
is emitted. The per-criteria view is the unweighted mean of the per-task
rates over the tasks that exercise the criterion, which keeps the two
views mutually consistent by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .tasks import CRITERIA_MATRIX, Criterion, TaskId

__all__ = [
    "NoEpisodesError",
    "UnknownCriterionError",
    "round_rate",
    "aggregate_by_task",
    "aggregate_by_criteria",
    "overall_rate",
    "BenchmarkReport",
    "build_report",
    "render_task_table",
    "render_criteria_table",
    "write_report",
]


class NoEpisodesError(ValueError):
    """A requested task has no episodes to aggregate."""


class UnknownCriterionError(KeyError):
    pass


class EpisodeLike(Protocol):
    task_id: TaskId

    @property
    def success(self) -> bool: ...


def round_rate(fraction: float) -> float:
    """Half-up rounding of a [0, 1] fraction to one decimal of a percent."""
    percent = Decimal(str(fraction)) * Decimal(100)
    return float(percent.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def aggregate_by_task(
    episodes: Iterable[EpisodeLike], tasks: Iterable[TaskId] | None = None
) -> dict[TaskId, float]:
    """successes / episodes for each task present (or each requested task)."""
    counts: dict[TaskId, list[int]] = {}
    for ep in episodes:
        bucket = counts.setdefault(ep.task_id, [0, 0])
        bucket[0] += 1 if ep.success else 0
        bucket[1] += 1
    wanted = list(tasks) if tasks is not None else sorted(counts, key=lambda t: t.value)
    rates: dict[TaskId, float] = {}
    for task in wanted:
        if task not in counts:
            raise NoEpisodesError(f"no episodes for {task.value}")
        successes, total = counts[task]
        rates[task] = successes / total
    return rates


def aggregate_by_criteria(
    per_task: Mapping[TaskId, float],
    matrix: Mapping[TaskId, frozenset[Criterion]] = CRITERIA_MATRIX,
) -> dict[Criterion, float]:
    """Unweighted mean of per-task rates over tasks exercising each criterion."""
    missing = [t.value for t in matrix if t not in per_task]
    if missing:
        raise NoEpisodesError(f"per-task rates missing for: {missing}")
    out: dict[Criterion, float] = {}
    for criterion in Criterion:
        owners = [t for t, crits in matrix.items() if criterion in crits]
        if not owners:
            raise UnknownCriterionError(criterion.value)
        out[criterion] = sum(per_task[t] for t in owners) / len(owners)
    return out


def overall_rate(per_task: Mapping[TaskId, float]) -> float:
    """Unweighted mean over tasks; callers round at emission."""
    if not per_task:
        raise NoEpisodesError("no per-task rates")
    return sum(per_task.values()) / len(per_task)


@dataclass(frozen=True)
class BenchmarkReport:
    """Emission-ready rates, already rounded to one decimal of a percent."""

    rounds: int
    per_task: dict[TaskId, float]
    per_criteria: dict[Criterion, float]
    overall: float
    outcome_counts: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "per_task_percent": {t.value: self.per_task[t] for t in sorted(self.per_task, key=lambda x: x.value)},
            "per_criteria_percent": {c.value: self.per_criteria[c] for c in Criterion if c in self.per_criteria},
            "overall_percent": self.overall,
            "outcome_counts": dict(sorted(self.outcome_counts.items())),
        }


def build_report(
    episodes: Iterable[EpisodeLike],
    rounds: int,
    matrix: Mapping[TaskId, frozenset[Criterion]] = CRITERIA_MATRIX,
) -> BenchmarkReport:
    episodes = list(episodes)
    per_task_exact = aggregate_by_task(episodes)
    per_criteria_exact = aggregate_by_criteria(per_task_exact, matrix)
    overall_exact = overall_rate(per_task_exact)
    outcome_counts: dict[str, int] = {}
    for ep in episodes:
        key = getattr(getattr(ep, "outcome", None), "value", "unknown")
        outcome_counts[key] = outcome_counts.get(key, 0) + 1
    return BenchmarkReport(
        rounds=rounds,
        per_task={t: round_rate(r) for t, r in per_task_exact.items()},
        per_criteria={c: round_rate(r) for c, r in per_criteria_exact.items()},
        overall=round_rate(overall_exact),
        outcome_counts=outcome_counts,
    )


_TASK_COLUMNS = [t for t in TaskId]
_CRITERIA_COLUMNS = [c for c in Criterion]


def render_task_table(report: BenchmarkReport) -> str:
    """Fixed-layout per-task view, tasks in id order plus the average."""
    headers = [f"Task {t.value[-1]}" for t in _TASK_COLUMNS if t in report.per_task] + ["Average"]
    values = [f"{report.per_task[t]:.1f}%" for t in _TASK_COLUMNS if t in report.per_task]
    values.append(f"{report.overall:.1f}%")
    return _two_row_table("Task", "Success rate", headers, values)


def render_criteria_table(report: BenchmarkReport) -> str:
    headers = [c.value for c in _CRITERIA_COLUMNS if c in report.per_criteria]
    values = [f"{report.per_criteria[c]:.1f}%" for c in _CRITERIA_COLUMNS if c in report.per_criteria]
    return _two_row_table("Criterion", "Success rate", headers, values)


def _two_row_table(corner: str, row_name: str, headers: list[str], values: list[str]) -> str:
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    left = max(len(corner), len(row_name))
    head = " | ".join([corner.ljust(left)] + [h.rjust(w) for h, w in zip(headers, widths)])
    rule = "-+-".join(["-" * left] + ["-" * w for w in widths])
    body = " | ".join([row_name.ljust(left)] + [v.rjust(w) for v, w in zip(values, widths)])
    return f"{head}\n{rule}\n{body}\n"


def write_report(report: BenchmarkReport, directory: str | Path) -> tuple[Path, Path]:
    """Write report.json and the fixed-layout tables; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / "report.json"
    json_path.write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    tables_path = directory / "tables.txt"
    tables_path.write_text(
        render_task_table(report) + "\n" + render_criteria_table(report), encoding="utf-8"
    )
    return json_path, tables_path

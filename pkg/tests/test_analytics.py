from __future__ import annotations

import json
import random
from dataclasses import dataclass

import pytest

from gamevlm.analytics import (
    NoEpisodesError,
    aggregate_by_criteria,
    aggregate_by_task,
    build_report,
    overall_rate,
    render_criteria_table,
    render_task_table,
    round_rate,
    write_report,
)
from gamevlm.tasks import CRITERIA_MATRIX, Criterion, TaskId


@dataclass(frozen=True)
class FakeEpisode:
    task_id: TaskId
    success: bool
    outcome: object = None


def episodes_with_rates(rates: dict[TaskId, tuple[int, int]]) -> list[FakeEpisode]:
    out = []
    for task, (successes, total) in rates.items():
        out += [FakeEpisode(task, i < successes) for i in range(total)]
    return out


REFERENCE_ROW = {
    TaskId.TASK1: 0.9,
    TaskId.TASK2: 0.8,
    TaskId.TASK3: 0.8,
    TaskId.TASK4: 0.9,
    TaskId.TASK5: 1.0,
    TaskId.TASK6: 0.6,
}


def test_aggregate_by_task_examples():
    episodes = episodes_with_rates({TaskId.TASK1: (9, 10), TaskId.TASK5: (10, 10), TaskId.TASK2: (0, 10)})
    rates = aggregate_by_task(episodes)
    assert rates[TaskId.TASK1] == 0.9
    assert rates[TaskId.TASK5] == 1.0
    assert rates[TaskId.TASK2] == 0.0


def test_aggregate_by_task_missing_task():
    episodes = episodes_with_rates({TaskId.TASK1: (9, 10)})
    with pytest.raises(NoEpisodesError):
        aggregate_by_task(episodes, tasks=[TaskId.TASK1, TaskId.TASK2])


def test_criteria_means_reference_row():
    rates = aggregate_by_criteria(REFERENCE_ROW)
    # SR owners: tasks 3, 4, 6 -> mean(80, 90, 60) = 76.7 after rounding
    assert round_rate(rates[Criterion.SR]) == 76.7
    assert round_rate(rates[Criterion.FP]) == 60.0
    assert round_rate(rates[Criterion.SUG]) == 83.3
    assert round_rate(rates[Criterion.SU]) == 80.0
    assert round_rate(rates[Criterion.VU]) == 80.0
    assert round_rate(rates[Criterion.WKU]) == 75.0


def test_criteria_requires_full_task_coverage():
    partial = dict(REFERENCE_ROW)
    del partial[TaskId.TASK6]
    with pytest.raises(NoEpisodesError):
        aggregate_by_criteria(partial)


def test_overall_rate_examples():
    assert round_rate(overall_rate(REFERENCE_ROW)) == 83.3
    assert round_rate(overall_rate({TaskId.TASK1: 1.0})) == 100.0
    assert round_rate(overall_rate({t: 0.0 for t in TaskId})) == 0.0


def test_round_rate_half_up():
    assert round_rate(0.8333333333333334) == 83.3
    assert round_rate(0.83349) == 83.3
    assert round_rate(0.8335) == 83.4  # half goes up
    assert round_rate(0.76666666666) == 76.7
    assert round_rate(1.0) == 100.0


def test_rates_bounded():
    rng = random.Random(1)
    for _ in range(200):
        per_task = {t: rng.random() for t in TaskId}
        for value in aggregate_by_criteria(per_task).values():
            assert 0.0 <= value <= 1.0
        assert 0.0 <= overall_rate(per_task) <= 1.0


def test_permutation_invariance():
    episodes = episodes_with_rates({t: (int(r * 10), 10) for t, r in REFERENCE_ROW.items()})
    rng = random.Random(3)
    shuffled = episodes[:]
    rng.shuffle(shuffled)
    assert aggregate_by_task(episodes) == aggregate_by_task(shuffled)
    assert build_report(episodes, 10).per_criteria == build_report(shuffled, 10).per_criteria


def test_cross_table_consistency_random_rows():
    """Criteria view recomputed from any task row stays self-consistent."""
    rng = random.Random(11)
    for _ in range(100):
        per_task = {t: rng.randrange(11) / 10 for t in TaskId}
        rates = aggregate_by_criteria(per_task)
        for criterion, value in rates.items():
            owners = [t for t, crits in CRITERIA_MATRIX.items() if criterion in crits]
            assert value == pytest.approx(sum(per_task[t] for t in owners) / len(owners))


def test_report_emission(tmp_path):
    episodes = episodes_with_rates({t: (int(r * 10), 10) for t, r in REFERENCE_ROW.items()})
    report = build_report(episodes, 10)
    assert report.per_task[TaskId.TASK1] == 90.0
    assert report.overall == 83.3
    json_path, tables_path = write_report(report, tmp_path)
    doc = json.loads(json_path.read_text())
    assert doc["per_task_percent"]["task6"] == 60.0
    assert doc["per_criteria_percent"]["SR"] == 76.7
    assert doc["overall_percent"] == 83.3
    tables = tables_path.read_text()
    assert "Task 1" in tables and "SUG" in tables


def test_table_layout_column_order():
    episodes = episodes_with_rates({t: (int(r * 10), 10) for t, r in REFERENCE_ROW.items()})
    report = build_report(episodes, 10)
    task_table = render_task_table(report)
    head = task_table.splitlines()[0]
    assert head.index("Task 1") < head.index("Task 6") < head.index("Average")
    crit_head = render_criteria_table(report).splitlines()[0]
    order = [crit_head.index(c.value) for c in Criterion]
    assert order == sorted(order)

from __future__ import annotations

import pytest

from gamevlm.transcript import (
    CorruptTranscriptError,
    PROPOSAL,
    SCORE_UPDATE,
    Transcript,
    canonical_lines,
    read_transcript,
    write_transcript,
)


def make_transcript() -> Transcript:
    t = Transcript(clock=lambda: 1234.5)
    t.append(PROPOSAL, {"plan": "pick(a)"}, agent="agent_a")
    t.append(PROPOSAL, {"plan": "pick(b)"}, agent="agent_b")
    t.append(SCORE_UPDATE, {"scores": {"agent_a": 0, "agent_b": 0}}, phase=1, round=1)
    return t


def test_events_are_sequenced_and_stamped():
    t = make_transcript()
    assert [e.seq for e in t.events] == [0, 1, 2]
    assert all(e.ts == 1234.5 for e in t.events)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        Transcript().append("telemetry", {})


def test_write_read_round_trip(tmp_path):
    t = make_transcript()
    path = write_transcript(t, tmp_path / "transcript_x.jsonl")
    events = read_transcript(path)
    assert events == t.events


def test_agent_key_omitted_when_absent(tmp_path):
    t = make_transcript()
    path = write_transcript(t, tmp_path / "t.jsonl")
    lines = path.read_text().splitlines()
    assert '"agent": "agent_a"' in lines[0]
    assert '"agent"' not in lines[2]


def test_canonical_lines_strip_timestamps():
    a = Transcript(clock=lambda: 1.0)
    b = Transcript(clock=lambda: 2.0)
    for t in (a, b):
        t.append(PROPOSAL, {"plan": "pick(a)"}, agent="agent_a")
    assert canonical_lines(a) == canonical_lines(b)


def test_truncated_file_is_corrupt(tmp_path):
    t = make_transcript()
    path = write_transcript(t, tmp_path / "t.jsonl")
    content = path.read_text()
    path.write_text(content[: len(content) - 20])
    with pytest.raises(CorruptTranscriptError):
        read_transcript(path)


def test_out_of_order_seq_is_corrupt(tmp_path):
    t = make_transcript()
    path = write_transcript(t, tmp_path / "t.jsonl")
    lines = path.read_text().splitlines()
    path.write_text("\n".join([lines[0], lines[2]]) + "\n")
    with pytest.raises(CorruptTranscriptError):
        read_transcript(path)

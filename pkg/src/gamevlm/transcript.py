"""Append-only game transcripts with deterministic JSONL serialization.

One event per line, schema ``{seq, phase, round, kind, agent?, payload, ts}``.
The ``agent`` key is omitted for events not attributable to one agent.
Timestamps come from an injectable clock so deterministic runs can be
compared byte-for-byte after stripping ``ts`` (see :func:`canonical_lines`).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

__all__ = [
    "PROPOSAL",
    "CONSISTENCY_RESULT",
    "QUESTION",
    "ANSWER",
    "VERDICT",
    "SCORE_UPDATE",
    "WINNER_SELECTED",
    "WARNING",
    "EVENT_KINDS",
    "TranscriptEvent",
    "Transcript",
    "CorruptTranscriptError",
    "write_transcript",
    "read_transcript",
    "canonical_lines",
]

PROPOSAL = "proposal"
CONSISTENCY_RESULT = "consistency_result"
QUESTION = "question"
ANSWER = "answer"
VERDICT = "verdict"
SCORE_UPDATE = "score_update"
WINNER_SELECTED = "winner_selected"
WARNING = "warning"

EVENT_KINDS = frozenset(
    {PROPOSAL, CONSISTENCY_RESULT, QUESTION, ANSWER, VERDICT, SCORE_UPDATE, WINNER_SELECTED, WARNING}
)


class CorruptTranscriptError(ValueError):
    """Transcript file is unparseable or structurally broken."""


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    phase: int
    round: int
    kind: str
    payload: dict[str, Any]
    ts: float
    agent: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "seq": self.seq,
            "phase": self.phase,
            "round": self.round,
            "kind": self.kind,
            "payload": self.payload,
            "ts": self.ts,
        }
        if self.agent is not None:
            d["agent"] = self.agent
        return d


class Transcript:
    """Causally ordered event log; append-only, safe for concurrent readers."""

    def __init__(self, clock: Callable[[], float] | None = None):
        self._clock = clock or time.time
        self._events: list[TranscriptEvent] = []

    def append(
        self,
        kind: str,
        payload: dict[str, Any],
        *,
        phase: int = 0,
        round: int = 0,
        agent: str | None = None,
    ) -> TranscriptEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = TranscriptEvent(
            seq=len(self._events),
            phase=phase,
            round=round,
            kind=kind,
            payload=payload,
            ts=float(self._clock()),
            agent=agent,
        )
        self._events.append(event)
        return event

    @property
    def events(self) -> tuple[TranscriptEvent, ...]:
        return tuple(self._events)

    def of_kind(self, kind: str) -> tuple[TranscriptEvent, ...]:
        return tuple(e for e in self._events if e.kind == kind)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[TranscriptEvent]:
        return iter(tuple(self._events))


def _event_to_line(event: TranscriptEvent) -> str:
    return json.dumps(event.to_dict(), sort_keys=True, ensure_ascii=True)


def write_transcript(events: Iterable[TranscriptEvent] | Transcript, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for event in events:
            fh.write(_event_to_line(event) + "\n")
    return path


def read_transcript(path: str | Path) -> tuple[TranscriptEvent, ...]:
    path = Path(path)
    events: list[TranscriptEvent] = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptTranscriptError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            event = TranscriptEvent(
                seq=int(raw["seq"]),
                phase=int(raw["phase"]),
                round=int(raw["round"]),
                kind=str(raw["kind"]),
                payload=dict(raw["payload"]),
                ts=float(raw["ts"]),
                agent=raw.get("agent"),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptTranscriptError(f"{path}:{lineno}: bad event: {exc}") from exc
        if event.kind not in EVENT_KINDS:
            raise CorruptTranscriptError(f"{path}:{lineno}: unknown kind {event.kind!r}")
        if event.seq != len(events):
            raise CorruptTranscriptError(
                f"{path}:{lineno}: seq {event.seq} out of order (expected {len(events)})"
            )
        events.append(event)
    return tuple(events)


def canonical_lines(events: Iterable[TranscriptEvent] | Transcript) -> list[str]:
    """Serialize events with timestamps stripped, for determinism checks."""
    lines = []
    for event in events:
        d = event.to_dict()
        d.pop("ts", None)
        lines.append(json.dumps(d, sort_keys=True, ensure_ascii=True))
    return lines

"""Interaction accounting and bug statistics over the audit log.

Every chat record is either active (the actor started the exchange) or
reactive (a direct response to the counterpart). Bot prompts count as
active: mid-flow the bot is the one asking for more information. Plain
tester chatter that neither commands the bot nor answers it is excluded
from the table and surfaced in the footer instead.
"""

from __future__ import annotations

import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum

from .eventlog import Direction, EventRecord, PayloadKind

PHASE_TRAINING = "training"
PHASE_TEST_SESSION = "test_session"
PHASES = (PHASE_TRAINING, PHASE_TEST_SESSION)


class InteractionClass(Enum):
    BOT_REACTIVE = "bot_reactive"
    BOT_ACTIVE = "bot_active"
    TESTER_REACTIVE = "tester_reactive"
    TESTER_ACTIVE_ACCEPTED = "tester_active_accepted"
    TESTER_ACTIVE_INVALID = "tester_active_invalid"

    @property
    def actor(self) -> str:
        return "bot" if self.value.startswith("bot") else "testers"


BOT_CLASSES = (InteractionClass.BOT_REACTIVE, InteractionClass.BOT_ACTIVE)
TESTER_CLASSES = (
    InteractionClass.TESTER_REACTIVE,
    InteractionClass.TESTER_ACTIVE_ACCEPTED,
    InteractionClass.TESTER_ACTIVE_INVALID,
)


def classify(record: EventRecord) -> InteractionClass | None:
    """Assign one interaction class to a chat record.

    Returns None only for plain tester chatter, which is excluded from the
    table. Timer and internal records are outside the taxonomy entirely
    and are rejected.
    """
    if record.direction is Direction.INTERNAL or record.payload_kind is PayloadKind.TIMER:
        raise ValueError("classify applies to chat records only")
    if record.direction is Direction.INBOUND:
        if record.payload_kind is PayloadKind.COMMAND:
            return InteractionClass.TESTER_ACTIVE_ACCEPTED
        if record.payload_kind is PayloadKind.INVALID_COMMAND:
            return InteractionClass.TESTER_ACTIVE_INVALID
        if record.payload_kind is PayloadKind.FLOW_REPLY:
            return InteractionClass.TESTER_REACTIVE
        return None  # PLAIN: excluded from the table
    # outbound: a correlated reply answers the tester; everything else the
    # bot started on its own (prompts, reminders, suggestions, notices).
    if record.payload_kind is PayloadKind.REPLY:
        return InteractionClass.BOT_REACTIVE
    return InteractionClass.BOT_ACTIVE


@dataclass(frozen=True)
class PhaseSpan:
    """Half-open offset range [start, end) belonging to one phase."""

    phase: str
    start: int
    end: int | None = None  # None -> to the end of the log

    def contains(self, offset: int) -> bool:
        return offset >= self.start and (self.end is None or offset < self.end)


def validate_spans(spans: list[PhaseSpan]) -> None:
    for span in spans:
        if span.phase not in PHASES:
            raise ValueError(f"unknown phase {span.phase!r}")
        if span.end is not None and span.end < span.start:
            raise ValueError(f"span end before start: {span}")
    ordered = sorted(spans, key=lambda s: s.start)
    for left, right in zip(ordered, ordered[1:]):
        if left.end is None or left.end > right.start:
            raise ValueError(f"overlapping phase spans: {left} / {right}")


def derive_phases(records: list[EventRecord]) -> list[PhaseSpan]:
    """Default split: offsets inside a session are test_session, the rest
    training. Session boundaries come from the internal lifecycle records.
    """
    spans: list[PhaseSpan] = []
    cursor = 0
    session_open: int | None = None
    for record in records:
        event = (record.data or {}).get("event")
        if event == "session_started" and session_open is None:
            if record.offset > cursor:
                spans.append(PhaseSpan(PHASE_TRAINING, cursor, record.offset))
            session_open = record.offset
        elif event == "session_ended" and session_open is not None:
            spans.append(PhaseSpan(PHASE_TEST_SESSION, session_open, record.offset + 1))
            cursor = record.offset + 1
            session_open = None
    if session_open is not None:
        spans.append(PhaseSpan(PHASE_TEST_SESSION, session_open, None))
    elif records and cursor <= records[-1].offset:
        spans.append(PhaseSpan(PHASE_TRAINING, cursor, None))
    return spans


@dataclass
class MetricsTable:
    """Class counts per (phase, actor) cell plus totals, Table-style."""

    counts: dict[str, Counter] = field(default_factory=dict)  # phase -> Counter[class]
    excluded_plain: int = 0
    uncovered: int = 0

    def count(self, phase: str, cls: InteractionClass) -> int:
        return self.counts.get(phase, Counter())[cls]

    def total(self, phase: str, actor: str) -> int:
        classes = BOT_CLASSES if actor == "bot" else TESTER_CLASSES
        return sum(self.count(phase, c) for c in classes)

    def grand_total(self, actor: str) -> int:
        return sum(self.total(phase, actor) for phase in PHASES)


def interaction_table(
    records: list[EventRecord], phase_spans: list[PhaseSpan] | None = None
) -> MetricsTable:
    """Tabulate classify() over the log, split by phase.

    With no spans given, phases are derived from the session lifecycle
    records in the log itself.
    """
    if phase_spans is None:
        phase_spans = derive_phases(records)
    validate_spans(phase_spans)
    table = MetricsTable(counts={phase: Counter() for phase in PHASES})
    for record in records:
        if record.direction is Direction.INTERNAL or record.payload_kind is PayloadKind.TIMER:
            continue
        span = next((s for s in phase_spans if s.contains(record.offset)), None)
        if span is None:
            table.uncovered += 1
            continue
        cls = classify(record)
        if cls is None:
            table.excluded_plain += 1
            continue
        table.counts[span.phase][cls] += 1
    return table


@dataclass(frozen=True)
class BugStats:
    per_participant_counts: tuple[int, ...]
    total: int
    mean: float
    median: float

    @property
    def participants(self) -> int:
        return len(self.per_participant_counts)


def bug_stats(per_participant_counts: list[int]) -> BugStats:
    """Aggregate per-participant bug counts: total, mean (2 decimals), median."""
    counts = tuple(int(c) for c in per_participant_counts)
    if any(c < 0 for c in counts):
        raise ValueError("bug counts must be non-negative")
    if not counts:
        return BugStats((), 0, 0.0, 0.0)
    total = sum(counts)
    return BugStats(
        per_participant_counts=counts,
        total=total,
        mean=round(total / len(counts), 2),
        median=float(statistics.median(counts)),
    )


def bug_counts_from_log(records: list[EventRecord]) -> dict[str, int]:
    """Bugs per tester, from the report_filed lifecycle records.

    Issues are excluded by definition; only report_type == "bug" counts.
    """
    per_user: dict[str, int] = defaultdict(int)
    for record in records:
        data = record.data or {}
        if data.get("event") == "report_filed" and data.get("report_type") == "bug":
            per_user[record.user_id or "unknown"] += 1
    return dict(per_user)


def bug_stats_from_log(records: list[EventRecord]) -> BugStats:
    counts = bug_counts_from_log(records)
    return bug_stats(sorted(counts.values()))

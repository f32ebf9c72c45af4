"""Session lifecycle, the virtual clock, and timer scheduling.

Nothing here reads wall time. Sessions are driven by explicit timestamps
(virtual milliseconds) so a 15-minute session replays instantly in tests;
feeding real time is the hosting adapter's job.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .knowledge import Catalog, KnowledgeItem

DEFAULT_REMINDER_FRACTIONS = (0.5, 0.8, 1.0)
DEFAULT_MIN_GAP_S = 180
DEFAULT_INITIAL_DELAY_S = 120


@dataclass(frozen=True)
class ReminderPolicy:
    """Reminders fire at fixed fractions of the session duration.

    The last fraction must be 1.0: that reminder doubles as the
    session-end notice.
    """

    fractions: tuple[float, ...] = DEFAULT_REMINDER_FRACTIONS

    def __post_init__(self) -> None:
        if not self.fractions:
            raise ValueError("reminder policy needs at least one fraction")
        if any(not 0 < f <= 1 for f in self.fractions):
            raise ValueError("reminder fractions must lie in (0, 1]")
        if list(self.fractions) != sorted(set(self.fractions)):
            raise ValueError("reminder fractions must be strictly increasing")
        if self.fractions[-1] != 1.0:
            raise ValueError("last reminder fraction must be 1.0 (end notice)")


@dataclass(frozen=True)
class SuggestionPolicy:
    min_gap_s: int = DEFAULT_MIN_GAP_S
    initial_delay_s: int = DEFAULT_INITIAL_DELAY_S
    seed: int = 0

    def __post_init__(self) -> None:
        if self.min_gap_s <= 0:
            raise ValueError("min_gap_s must be > 0")
        if self.initial_delay_s < 0:
            raise ValueError("initial_delay_s must be >= 0")


class EndReason(Enum):
    EXPIRED = "expired"
    STOPPED = "stopped"


@dataclass
class Session:
    session_id: str
    channel_id: str
    started_at: int
    duration_ms: int
    fractions: tuple[float, ...] = DEFAULT_REMINDER_FRACTIONS
    ended_at: int | None = None
    end_reason: EndReason | None = None

    def __post_init__(self) -> None:
        if self.duration_ms <= 0:
            raise ValueError("session duration must be > 0")

    @property
    def ends_at(self) -> int:
        return self.started_at + self.duration_ms

    @property
    def active(self) -> bool:
        return self.ended_at is None

    def stop(self, now: int) -> None:
        self.ended_at = now
        self.end_reason = EndReason.STOPPED

    def expire(self) -> None:
        # Expiry is pinned to the scheduled end, not to when it was noticed.
        self.ended_at = self.ends_at
        self.end_reason = EndReason.EXPIRED


class TimerKind(Enum):
    REMINDER_DUE = "reminder_due"
    SUGGESTION_DUE = "suggestion_due"
    SESSION_EXPIRED = "session_expired"


@dataclass(frozen=True)
class TimerEvent:
    kind: TimerKind
    session_id: str
    due_at: int
    fraction: float | None = None


@dataclass
class SessionTimers:
    """Mutable schedule for one session: what is still due, and when.

    due_events pops entries as it emits them, which is what makes each
    timer event fire at most once.
    """

    session: Session
    pending_reminders: list[tuple[float, int]] = field(default_factory=list)
    next_suggestion_at: int | None = None
    expiry_emitted: bool = False


def start_session(
    channel_id: str,
    duration_minutes: float,
    now: int,
    session_id: str,
    reminder_policy: ReminderPolicy,
    suggestion_policy: SuggestionPolicy,
    rng: random.Random,
) -> SessionTimers:
    """Create a session starting at `now` with its full timer schedule.

    Reminder due-times are started_at + fraction * duration; the first
    suggestion lands uniformly in [initial_delay, initial_delay + min_gap]
    after the start, or never if that already falls past the end.
    """
    if duration_minutes <= 0:
        raise ValueError("duration must be a positive number of minutes")
    duration_ms = int(round(duration_minutes * 60_000))
    session = Session(
        session_id=session_id,
        channel_id=channel_id,
        started_at=now,
        duration_ms=duration_ms,
        fractions=reminder_policy.fractions,
    )
    reminders = [
        (fraction, now + int(round(fraction * duration_ms)))
        for fraction in reminder_policy.fractions
    ]
    first_suggestion = now + int(
        round(
            (suggestion_policy.initial_delay_s + rng.uniform(0, suggestion_policy.min_gap_s))
            * 1000
        )
    )
    timers = SessionTimers(session=session, pending_reminders=reminders)
    if first_suggestion <= session.ends_at:
        timers.next_suggestion_at = first_suggestion
    return timers


# Tie-break at equal due times: reminders speak first, the expiry notice
# always goes last.
_EVENT_PRIORITY = {
    TimerKind.REMINDER_DUE: 0,
    TimerKind.SUGGESTION_DUE: 1,
    TimerKind.SESSION_EXPIRED: 2,
}


def next_due_event(timers: SessionTimers, now: int) -> TimerEvent | None:
    """Pop the single earliest not-yet-emitted timer event with due_at <= now.

    Popping one at a time lets the caller reschedule (the suggestion chain)
    between events while keeping emission in strict due-time order.
    """
    session = timers.session
    if not session.active:
        return None
    candidates: list[TimerEvent] = []
    if timers.pending_reminders and timers.pending_reminders[0][1] <= now:
        fraction, due_at = timers.pending_reminders[0]
        candidates.append(
            TimerEvent(TimerKind.REMINDER_DUE, session.session_id, due_at, fraction)
        )
    if (
        timers.next_suggestion_at is not None
        and timers.next_suggestion_at <= now
        and timers.next_suggestion_at <= session.ends_at
    ):
        candidates.append(
            TimerEvent(
                TimerKind.SUGGESTION_DUE, session.session_id, timers.next_suggestion_at
            )
        )
    if now >= session.ends_at and not timers.expiry_emitted:
        candidates.append(
            TimerEvent(TimerKind.SESSION_EXPIRED, session.session_id, session.ends_at)
        )
    if not candidates:
        return None
    event = min(candidates, key=lambda e: (e.due_at, _EVENT_PRIORITY[e.kind]))
    if event.kind is TimerKind.REMINDER_DUE:
        timers.pending_reminders.pop(0)
    elif event.kind is TimerKind.SUGGESTION_DUE:
        timers.next_suggestion_at = None
    else:
        timers.expiry_emitted = True
    return event


def due_events(timers: SessionTimers, now: int) -> list[TimerEvent]:
    """All not-yet-emitted timer events with due_at <= now, in due order.

    Each event is emitted exactly once (calling again at the same `now`
    returns nothing). SessionExpired sorts after everything else at the
    same instant. Ended sessions produce no further events.
    """
    events: list[TimerEvent] = []
    while True:
        event = next_due_event(timers, now)
        if event is None:
            return events
        events.append(event)
        if event.kind is TimerKind.SESSION_EXPIRED:
            return events


def next_suggestion_time(
    rng: random.Random, policy: SuggestionPolicy, last_emit: int
) -> int:
    """Draw the next suggestion time: at least min_gap after the last one."""
    gap_ms = policy.min_gap_s * 1000
    return last_emit + gap_ms + int(round(rng.uniform(0, gap_ms)))


def pick_suggestion(rng: random.Random, catalog: Catalog) -> KnowledgeItem:
    """Uniform draw over the catalog. Empty catalogs are the caller's problem."""
    if not catalog.items:
        raise ValueError("cannot pick a suggestion from an empty catalog")
    return catalog.items[rng.randrange(len(catalog.items))]

"""Session lifecycle, timer schedule, and the suggestion scheduler."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from etbot.knowledge import Catalog, KnowledgeGroup, KnowledgeItem
from etbot.sessions import (
    ReminderPolicy,
    SuggestionPolicy,
    TimerKind,
    due_events,
    next_due_event,
    next_suggestion_time,
    pick_suggestion,
    start_session,
)

# a policy whose first suggestion always lands beyond a 15-minute session,
# so reminder tests see reminders only
NO_SUGGESTIONS = SuggestionPolicy(min_gap_s=60, initial_delay_s=10_000)


def make_timers(duration_minutes=15.0, now=0, policy=NO_SUGGESTIONS, seed=7):
    return start_session(
        "chan",
        duration_minutes,
        now,
        "session-1",
        ReminderPolicy(),
        policy,
        random.Random(seed),
    )


class TestStartSession:
    def test_default_reminders_for_fifteen_minutes(self):
        timers = make_timers(15, now=1000)
        assert [due for _, due in timers.pending_reminders] == [
            1000 + 450_000,
            1000 + 720_000,
            1000 + 900_000,
        ]

    def test_zero_duration_rejected(self):
        with pytest.raises(ValueError):
            make_timers(0)

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            make_timers(-3)

    def test_first_suggestion_within_policy_window(self):
        policy = SuggestionPolicy(min_gap_s=180, initial_delay_s=120)
        timers = make_timers(15, now=0, policy=policy)
        assert timers.next_suggestion_at is not None
        assert 120_000 <= timers.next_suggestion_at <= 300_000

    def test_suggestion_beyond_session_end_discarded(self):
        timers = make_timers(2, policy=SuggestionPolicy(min_gap_s=60, initial_delay_s=500))
        assert timers.next_suggestion_at is None


class TestDueEvents:
    def test_first_reminder_only(self):
        timers = make_timers(15)
        events = due_events(timers, 460_000)
        assert [(e.kind, e.fraction) for e in events] == [(TimerKind.REMINDER_DUE, 0.5)]
        assert events[0].due_at == 450_000

    def test_remaining_reminders_then_expiry(self):
        timers = make_timers(15)
        due_events(timers, 460_000)
        events = due_events(timers, 901_000)
        kinds = [e.kind for e in events]
        assert kinds == [
            TimerKind.REMINDER_DUE,
            TimerKind.REMINDER_DUE,
            TimerKind.SESSION_EXPIRED,
        ]
        assert [e.due_at for e in events] == [720_000, 900_000, 900_000]

    def test_idempotent_at_same_now(self):
        timers = make_timers(15)
        assert due_events(timers, 460_000)
        assert due_events(timers, 460_000) == []

    def test_each_reminder_once(self):
        timers = make_timers(15)
        seen = []
        for now in range(0, 1_000_001, 10_000):
            seen.extend(e.fraction for e in due_events(timers, now) if e.fraction)
        assert seen == [0.5, 0.8, 1.0]

    def test_stopped_session_emits_nothing(self):
        timers = make_timers(15)
        timers.session.stop(100_000)
        assert due_events(timers, 901_000) == []

    def test_expired_exactly_once(self):
        timers = make_timers(15)
        first = due_events(timers, 2_000_000)
        second = due_events(timers, 3_000_000)
        expiries = [e for e in first + second if e.kind is TimerKind.SESSION_EXPIRED]
        assert len(expiries) == 1

    @given(
        duration=st.integers(min_value=1, max_value=120),
        advances=st.lists(st.integers(min_value=1, max_value=2_000_000), max_size=20),
    )
    @settings(max_examples=60, deadline=None)
    def test_no_event_outside_session_bounds(self, duration, advances):
        policy = SuggestionPolicy(min_gap_s=30, initial_delay_s=0)
        timers = make_timers(duration, policy=policy)
        ends_at = timers.session.ends_at
        now = 0
        for step in advances:
            now += step
            while True:
                event = next_due_event(timers, now)
                if event is None:
                    break
                assert 0 <= event.due_at <= ends_at
                if event.kind is TimerKind.SUGGESTION_DUE:
                    # mimic the engine: chain the next suggestion draw
                    nxt = next_suggestion_time(random.Random(now), policy, event.due_at)
                    timers.next_suggestion_at = nxt if nxt <= ends_at else None
                if event.kind is TimerKind.SESSION_EXPIRED:
                    timers.session.expire()


class TestSuggestionScheduler:
    def test_next_time_deterministic(self):
        policy = SuggestionPolicy(min_gap_s=180, initial_delay_s=120)
        a = next_suggestion_time(random.Random(42), policy, 1000)
        b = next_suggestion_time(random.Random(42), policy, 1000)
        assert a == b

    def test_gap_always_respected(self):
        # brute-force check of the gap inequality over 10 000 draws
        policy = SuggestionPolicy(min_gap_s=180, initial_delay_s=0)
        rng = random.Random(123)
        last = 0
        for _ in range(10_000):
            nxt = next_suggestion_time(rng, policy, last)
            assert nxt - last >= policy.min_gap_s * 1000
            last = nxt

    def test_pick_singleton(self):
        item = KnowledgeItem("only", KnowledgeGroup.TOURS, "Only", "body")
        catalog = Catalog(items=(item,), version="1")
        assert pick_suggestion(random.Random(1), catalog) is item

    def test_pick_same_seed_same_sequence(self):
        catalog = _ten_item_catalog()
        rng_a, rng_b = random.Random(9), random.Random(9)
        seq_a = [pick_suggestion(rng_a, catalog).item_id for _ in range(50)]
        seq_b = [pick_suggestion(rng_b, catalog).item_id for _ in range(50)]
        assert seq_a == seq_b

    def test_pick_uniform_over_ten_items(self):
        # frequency check against the uniform oracle: 10% +/- 2% absolute
        catalog = _ten_item_catalog()
        rng = random.Random(2024)
        counts = {item.item_id: 0 for item in catalog.items}
        draws = 10_000
        for _ in range(draws):
            counts[pick_suggestion(rng, catalog).item_id] += 1
        for item_id, count in counts.items():
            assert 0.08 <= count / draws <= 0.12, f"{item_id} drawn {count}/{draws}"

    def test_pick_empty_catalog_raises(self):
        with pytest.raises(ValueError):
            pick_suggestion(random.Random(0), Catalog(items=(), version="1"))


def _ten_item_catalog() -> Catalog:
    items = tuple(
        KnowledgeItem(f"item-{i}", KnowledgeGroup.TOURS, f"Item {i}", "body text")
        for i in range(10)
    )
    return Catalog(items=items, version="1")


class TestPolicies:
    def test_fractions_must_increase(self):
        with pytest.raises(ValueError):
            ReminderPolicy((0.8, 0.5, 1.0))

    def test_last_fraction_must_be_one(self):
        with pytest.raises(ValueError):
            ReminderPolicy((0.5, 0.8))

    def test_fractions_in_unit_interval(self):
        with pytest.raises(ValueError):
            ReminderPolicy((0.0, 1.0))
        with pytest.raises(ValueError):
            ReminderPolicy((0.5, 1.5))

    def test_min_gap_positive(self):
        with pytest.raises(ValueError):
            SuggestionPolicy(min_gap_s=0)

    def test_initial_delay_non_negative(self):
        with pytest.raises(ValueError):
            SuggestionPolicy(initial_delay_s=-1)

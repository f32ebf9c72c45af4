"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Everything here is pinned: exact virtual-time reminder offsets, the
±2% uniformity bound, byte-identical replay logs, and the published-table
arithmetic.
"""

import pathlib
import random
import time

import pytest

from etbot.analytics import (
    InteractionClass,
    PHASE_TEST_SESSION,
    PHASE_TRAINING,
    PhaseSpan,
    bug_stats,
    classify,
    interaction_table,
)
from etbot.config import EngineConfig
from etbot.engine import Engine
from etbot.eventlog import Actor, Direction, EventRecord, EventStore, PayloadKind
from etbot.knowledge import (
    Catalog,
    KnowledgeGroup,
    KnowledgeItem,
    list_topics,
    load_default_catalog,
    lookup,
)
from etbot.messages import ActionKind, CommandName, InboundMessage
from etbot.transcript import load_script, random_script, run_transcript

TRANSCRIPTS = sorted(
    (pathlib.Path(__file__).resolve().parent.parent / "transcripts").glob("*.yaml")
)


def report(line: str) -> None:
    print(f"\n{line}")


@pytest.fixture(scope="module")
def golden_results():
    assert TRANSCRIPTS, "no golden transcripts found"
    return {path.name: (load_script(path), run_transcript(load_script(path))) for path in TRANSCRIPTS}


def test_criterion_1_golden_transcripts(golden_results):
    """All seven commands exercised through replay, intro included, < 5 s."""
    started = time.perf_counter()
    for path in TRANSCRIPTS:
        result = run_transcript(load_script(path))
        assert result.passed, f"{path.name}: {result.summary()}"
    elapsed = time.perf_counter() - started

    commands_seen = set()
    intro_asserted = False
    for name, (script, result) in golden_results.items():
        for step in script.steps:
            text = getattr(step, "text", "")
            if text.startswith("?"):
                word = text[1:].split()[0].lower() if len(text) > 1 else ""
                commands_seen.add(word)
            pattern = getattr(step, "pattern", "")
            if "exploratory-testing assistant" in pattern:
                intro_asserted = True
    expected = {c.value for c in CommandName}
    assert expected <= commands_seen, f"commands not exercised: {expected - commands_seen}"
    assert intro_asserted, "no golden transcript asserts the self-introduction"
    assert elapsed < 5.0, f"golden suite took {elapsed:.2f}s"
    report(
        f"ACCEPTANCE 1 PASS: {len(TRANSCRIPTS)} golden transcripts, all 7 commands, "
        f"intro asserted, {elapsed:.2f}s"
    )


def test_criterion_2_replay_determinism():
    """Same seed, same bytes; 100 randomized scripts show zero divergence."""
    for path in TRANSCRIPTS:
        script = load_script(path)
        a = run_transcript(script, seed=11)
        b = run_transcript(script, seed=11)
        assert a.store.serialize() == b.store.serialize(), f"{path.name} diverged"

    divergences = 0
    for i in range(100):
        script = random_script(seed=1000 + i, steps=40)
        first = run_transcript(script, seed=i)
        second = run_transcript(script, seed=i)
        if first.store.serialize() != second.store.serialize():
            divergences += 1
    assert divergences == 0
    report("ACCEPTANCE 2 PASS: golden + 100 randomized replays byte-identical")


def test_criterion_3_timer_fidelity():
    """15-minute session: reminders at exactly +450 s, +720 s, +900 s."""
    engine = Engine(EngineConfig(), EventStore(), load_default_catalog())
    engine.handle_message(InboundMessage("chan", "amy", "?start", 0))
    engine.handle_message(InboundMessage("chan", "amy", "15", 0))
    # advance one virtual second at a time through 1500 s
    for now_s in range(1, 1501):
        engine.advance_clock("chan", now_s * 1000)
    reminders = [
        r for r in engine.store.records if r.payload_kind is PayloadKind.REMINDER
    ]
    offsets = [r.timestamp for r in reminders]
    assert offsets == [450_000, 720_000, 900_000], offsets
    assert len(set(offsets)) == 3  # each once
    after_expiry = [r for r in reminders if r.timestamp > 900_000]
    assert after_expiry == []
    report("ACCEPTANCE 3 PASS: reminders at exactly +450s/+720s/+900s, once each")


def test_criterion_4_suggestion_safety_and_uniformity():
    """10 000 randomized runs: no suggestion inside an open flow; 10-item
    uniformity within ±2% absolute."""
    catalog = Catalog(
        items=tuple(
            KnowledgeItem(f"item-{i}", KnowledgeGroup.TOURS, f"Item {i}", "body")
            for i in range(10)
        ),
        version="1",
    )
    counts: dict[str, int] = {}
    violations = 0
    runs = 10_000
    for i in range(runs):
        rng = random.Random(i)
        config = EngineConfig(
            suggestion_min_gap_s=30, suggestion_initial_delay_s=10, seed=i
        )
        engine = Engine(config, EventStore(), catalog)
        duration_min = rng.uniform(2.0, 5.0)
        end_ms = int(duration_min * 60_000)

        def say(text, t):
            return engine.handle_message(InboundMessage("c", "u", text, t))

        say("?start", 0)
        say(f"{duration_min:.2f}", 0)
        say("?charter", 0)  # dialog now open; first suggestion due in [10, 40] s
        flow_close = int(rng.uniform(45, duration_min * 60 - 5) * 1000)
        while_open = engine.advance_clock("c", flow_close)
        violations += sum(1 for a in while_open if a.kind is ActionKind.SUGGESTION)
        closing = say("cancel", flow_close)
        suggestions = [a for a in closing if a.kind is ActionKind.SUGGESTION]
        assert suggestions, "deferred suggestion must fire when the flow closes"
        suggestions += [
            a
            for a in engine.advance_clock("c", end_ms + 10_000)
            if a.kind is ActionKind.SUGGESTION
        ]
        for action in suggestions:
            counts[action.item_id] = counts.get(action.item_id, 0) + 1

    assert violations == 0
    total = sum(counts.values())
    assert total >= 10_000, f"not enough draws to judge uniformity: {total}"
    worst = 0.0
    for i in range(10):
        freq = counts.get(f"item-{i}", 0) / total
        worst = max(worst, abs(freq - 0.10))
        assert 0.08 <= freq <= 0.12, f"item-{i} frequency {freq:.4f} outside 10%±2%"
    report(
        f"ACCEPTANCE 4 PASS: {runs} runs, 0 in-flow suggestions, "
        f"{total} draws, worst deviation {worst * 100:.2f}% (bound 2%)"
    )


def _chat_records(records):
    return [
        r
        for r in records
        if r.direction is not Direction.INTERNAL and r.payload_kind is not PayloadKind.TIMER
    ]


def test_criterion_5_interaction_accounting(golden_results):
    """(a) partition identity on every generated log; (b) published-table
    fixture reproduces the totals; (c) 12-record hand oracle matches."""
    # (a) every golden log: totals equal the sum of the classes
    for name, (_script, result) in golden_results.items():
        table = interaction_table(result.records)
        for phase in (PHASE_TRAINING, PHASE_TEST_SESSION):
            bot_sum = table.count(phase, InteractionClass.BOT_REACTIVE) + table.count(
                phase, InteractionClass.BOT_ACTIVE
            )
            tester_sum = (
                table.count(phase, InteractionClass.TESTER_REACTIVE)
                + table.count(phase, InteractionClass.TESTER_ACTIVE_ACCEPTED)
                + table.count(phase, InteractionClass.TESTER_ACTIVE_INVALID)
            )
            assert table.total(phase, "bot") == bot_sum, name
            assert table.total(phase, "testers") == tester_sum, name
        # independent recount straight off the records
        classified = [c for c in map(classify, _chat_records(result.records)) if c is not None]
        assert len(classified) == table.grand_total("bot") + table.grand_total("testers")

    # (b) synthetic fixture shaped like the published per-phase counts
    def rec(direction, kind, correlation=None):
        return EventRecord(
            timestamp=0,
            channel_id="chan",
            actor=Actor.TESTER if direction is Direction.INBOUND else Actor.BOT,
            direction=direction,
            payload_kind=kind,
            text="x",
            user_id="p" if direction is Direction.INBOUND else None,
            correlation_id=correlation,
        )

    store = EventStore()
    for _ in range(107):
        store.append(rec(Direction.OUTBOUND, PayloadKind.REPLY, correlation=0))
    for _ in range(14):
        store.append(rec(Direction.OUTBOUND, PayloadKind.PROMPT))
    for _ in range(37):
        store.append(rec(Direction.INBOUND, PayloadKind.FLOW_REPLY))
    for _ in range(100):
        store.append(rec(Direction.INBOUND, PayloadKind.COMMAND))
    for _ in range(7):
        store.append(rec(Direction.INBOUND, PayloadKind.INVALID_COMMAND))
    training_len = len(store.records)
    for _ in range(340):
        store.append(rec(Direction.OUTBOUND, PayloadKind.REPLY, correlation=0))
    for _ in range(120):
        store.append(rec(Direction.OUTBOUND, PayloadKind.SUGGESTION))
    for _ in range(262):
        store.append(rec(Direction.INBOUND, PayloadKind.FLOW_REPLY))
    for _ in range(90):
        store.append(rec(Direction.INBOUND, PayloadKind.COMMAND))
    spans = [
        PhaseSpan(PHASE_TRAINING, 0, training_len),
        PhaseSpan(PHASE_TEST_SESSION, training_len, None),
    ]
    table = interaction_table(store.records, spans)
    assert table.total(PHASE_TRAINING, "bot") == 121 == 107 + 14
    assert table.total(PHASE_TEST_SESSION, "bot") == 460 == 340 + 120
    assert table.total(PHASE_TRAINING, "testers") == 144 == 37 + 100 + 7
    assert table.total(PHASE_TEST_SESSION, "testers") == 352 == 262 + 90 + 0

    # (c) 12-record hand-classified oracle
    hand = EventStore()
    hand.append(rec(Direction.INBOUND, PayloadKind.COMMAND))          # accepted
    hand.append(rec(Direction.OUTBOUND, PayloadKind.REPLY, 0))        # bot reactive
    hand.append(rec(Direction.INBOUND, PayloadKind.INVALID_COMMAND))  # invalid
    hand.append(rec(Direction.OUTBOUND, PayloadKind.REPLY, 2))        # bot reactive
    hand.append(rec(Direction.INBOUND, PayloadKind.COMMAND))          # accepted
    hand.append(rec(Direction.OUTBOUND, PayloadKind.PROMPT, 4))       # bot active
    hand.append(rec(Direction.INBOUND, PayloadKind.FLOW_REPLY))       # reactive
    hand.append(rec(Direction.OUTBOUND, PayloadKind.PROMPT, 6))       # bot active
    hand.append(rec(Direction.INBOUND, PayloadKind.PLAIN))            # excluded
    hand.append(rec(Direction.OUTBOUND, PayloadKind.REMINDER))        # bot active
    hand.append(rec(Direction.OUTBOUND, PayloadKind.SUGGESTION))      # bot active
    hand.append(rec(Direction.OUTBOUND, PayloadKind.SYSTEM))          # bot active
    table = interaction_table(hand.records, [PhaseSpan(PHASE_TRAINING, 0, None)])
    assert table.count(PHASE_TRAINING, InteractionClass.BOT_REACTIVE) == 2
    assert table.count(PHASE_TRAINING, InteractionClass.BOT_ACTIVE) == 5
    assert table.count(PHASE_TRAINING, InteractionClass.TESTER_ACTIVE_ACCEPTED) == 2
    assert table.count(PHASE_TRAINING, InteractionClass.TESTER_REACTIVE) == 1
    assert table.count(PHASE_TRAINING, InteractionClass.TESTER_ACTIVE_INVALID) == 1
    assert table.excluded_plain == 1
    report("ACCEPTANCE 5 PASS: partition law, published totals 121/460/144/352, hand oracle")


def test_criterion_6_bug_statistics():
    """bug_stats([3,4,5,5,5,9]) -> total 31, mean 5.17 (rounds to 5.2), median 5."""
    stats = bug_stats([3, 4, 5, 5, 5, 9])
    assert stats.total == 31
    assert stats.mean == 5.17
    assert abs(round(stats.mean, 1) - 5.2) < 1e-9
    assert stats.median == 5
    report("ACCEPTANCE 6 PASS: total 31, mean 5.17 (~5.2), median 5")


def test_criterion_7_knowledge_base():
    """Seed catalog validates; every listed key resolves; required items present."""
    catalog = load_default_catalog()  # raises CatalogError if invalid
    listing = list_topics(catalog)
    keys = [
        line.strip().split(" - ")[0]
        for line in listing.splitlines()
        if line.startswith("  ")
    ]
    assert keys
    for key in keys:
        assert lookup(catalog, key).item_id == key
    ids = set(catalog.keys())
    required = {
        "equivalence-partitioning",
        "boundary-value-analysis",
        "bad-neighborhood-tour",
        "mobile-network",
        "mobile-geolocation",
        "mobile-bluetooth",
        "mobile-camera",
        "mobile-ui-events",
    }
    assert required <= ids, f"missing: {required - ids}"
    report(f"ACCEPTANCE 7 PASS: {len(catalog.items)} items, all {len(keys)} keys resolve")


def test_criterion_8_audit_completeness(golden_results):
    """Inbound records == scripted messages; outbound records == matched
    expectations + unmatched outputs; write-ahead survives a crash-before-send."""
    for name, (_script, result) in golden_results.items():
        inbound = [r for r in result.records if r.direction is Direction.INBOUND]
        outbound = [r for r in result.records if r.direction is Direction.OUTBOUND]
        assert len(inbound) == result.messages_sent, name
        expected_outbound = result.expectations_matched + len(result.leftover_outputs)
        assert len(outbound) == expected_outbound, name

    # crash before send: the engine appends before releasing actions, so a
    # caller that dies holding them still leaves a complete log
    store = EventStore()
    engine = Engine(EngineConfig(), store, load_default_catalog())
    actions = engine.handle_message(InboundMessage("chan", "amy", "?commands", 0))
    del actions  # never delivered anywhere
    kinds = [r.payload_kind for r in store.records]
    assert kinds == [PayloadKind.COMMAND, PayloadKind.SYSTEM, PayloadKind.REPLY]
    report("ACCEPTANCE 8 PASS: audit counts match on all goldens; write-ahead holds")

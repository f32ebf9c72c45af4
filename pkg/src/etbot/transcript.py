"""Scripted-transcript adapter: replayable chat sessions as regression tests.

A transcript is an ordered script of tester messages, virtual-clock
advances, and expectations over the bot's output. Running one drives a
fresh engine; expectations consume bot output strictly in emission order,
and the first mismatch fails the run with context. With a fixed seed the
whole thing is deterministic down to the audit-log bytes.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .config import EngineConfig
from .engine import Engine
from .eventlog import EventRecord, EventStore
from .knowledge import Catalog, load_catalog, load_default_catalog
from .messages import Attachment, InboundMessage, MediaKind, OutboundAction


@dataclass(frozen=True)
class SayStep:
    text: str
    user: str | None = None
    attachments: tuple[Attachment, ...] = ()


@dataclass(frozen=True)
class AdvanceStep:
    seconds: float


@dataclass(frozen=True)
class ExpectStep:
    matcher: str  # exact | contains | regex
    pattern: str

    def matches(self, text: str) -> bool:
        if self.matcher == "exact":
            return text == self.pattern
        if self.matcher == "contains":
            return self.pattern in text
        return re.search(self.pattern, text) is not None


Step = SayStep | AdvanceStep | ExpectStep


@dataclass
class TranscriptScript:
    steps: list[Step]
    channel: str = "channel-1"
    user: str = "tester-1"
    config_overrides: dict[str, Any] = field(default_factory=dict)

    @property
    def scripted_messages(self) -> int:
        return sum(1 for s in self.steps if isinstance(s, SayStep))

    @property
    def expectations(self) -> int:
        return sum(1 for s in self.steps if isinstance(s, ExpectStep))


class ScriptError(ValueError):
    """Transcript file is not a well-formed script."""


def _parse_attachment(raw: dict[str, Any]) -> Attachment:
    return Attachment(
        filename=str(raw["filename"]),
        media_kind=MediaKind(raw.get("media_kind", "file")),
        content_ref=str(raw.get("ref", raw.get("content_ref", ""))),
        size_bytes=int(raw.get("size_bytes", 0)),
    )


def parse_script(raw: str) -> TranscriptScript:
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ScriptError(f"transcript is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "steps" not in doc:
        raise ScriptError("transcript must be a mapping with a 'steps' list")
    steps: list[Step] = []
    for i, entry in enumerate(doc["steps"]):
        if not isinstance(entry, dict):
            raise ScriptError(f"step {i} must be a mapping, got {entry!r}")
        if "say" in entry:
            attachments = tuple(
                _parse_attachment(a) for a in entry.get("attach", []) or []
            )
            steps.append(
                SayStep(
                    text=str(entry["say"]),
                    user=entry.get("user"),
                    attachments=attachments,
                )
            )
        elif "advance" in entry:
            seconds = float(entry["advance"])
            if seconds < 0:
                raise ScriptError(f"step {i}: advance must be >= 0")
            steps.append(AdvanceStep(seconds))
        elif "expect" in entry:
            matcher = entry["expect"]
            if not isinstance(matcher, dict) or len(matcher) != 1:
                raise ScriptError(
                    f"step {i}: expect needs exactly one of exact/contains/regex"
                )
            kind, pattern = next(iter(matcher.items()))
            if kind not in ("exact", "contains", "regex"):
                raise ScriptError(f"step {i}: unknown matcher {kind!r}")
            steps.append(ExpectStep(kind, str(pattern)))
        else:
            raise ScriptError(f"step {i}: need one of say/advance/expect, got {entry!r}")
    overrides = doc.get("config", {}) or {}
    if not isinstance(overrides, dict):
        raise ScriptError("transcript 'config' must be a mapping of overrides")
    if "reminder_fractions" in overrides:
        overrides["reminder_fractions"] = tuple(
            float(f) for f in overrides["reminder_fractions"]
        )
    return TranscriptScript(
        steps=steps,
        channel=str(doc.get("channel", "channel-1")),
        user=str(doc.get("user", "tester-1")),
        config_overrides=overrides,
    )


def load_script(path: str | Path) -> TranscriptScript:
    return parse_script(Path(path).read_text(encoding="utf-8"))


@dataclass
class TranscriptResult:
    passed: bool
    failure: str | None
    failed_step: int | None
    messages_sent: int
    expectations_matched: int
    leftover_outputs: list[str]
    records: list[EventRecord]
    store: EventStore
    actions: list[OutboundAction] = field(default_factory=list)

    def summary(self) -> str:
        if self.passed:
            return (
                f"PASS: {self.expectations_matched} expectation(s) matched, "
                f"{self.messages_sent} message(s) sent, "
                f"{len(self.leftover_outputs)} unmatched bot output(s)"
            )
        return f"FAIL at step {self.failed_step}: {self.failure}"


def run_transcript(
    script: TranscriptScript,
    config: EngineConfig | None = None,
    seed: int | None = None,
    store: EventStore | None = None,
    catalog: Catalog | None = None,
) -> TranscriptResult:
    """Drive a fresh engine with the script and check every expectation.

    The script's own config overrides are applied first, then the explicit
    seed argument (when given) wins over everything.
    """
    config = config or EngineConfig()
    if script.config_overrides:
        config = replace(config, **script.config_overrides).validate()
    if seed is not None:
        config = replace(config, seed=seed)
    store = store if store is not None else EventStore()
    if catalog is None:
        catalog = (
            load_catalog(config.catalog_path)
            if config.catalog_path
            else load_default_catalog()
        )
    engine = Engine(config, store, catalog)

    now = 0
    pending: list[str] = []
    all_actions: list[OutboundAction] = []
    messages_sent = 0
    matched = 0
    failure: str | None = None
    failed_step: int | None = None

    for i, step in enumerate(script.steps):
        if isinstance(step, SayStep):
            msg = InboundMessage(
                channel_id=script.channel,
                user_id=step.user or script.user,
                text=step.text,
                timestamp=now,
                attachments=step.attachments,
            )
            actions = engine.handle_message(msg)
            messages_sent += 1
        elif isinstance(step, AdvanceStep):
            now += int(round(step.seconds * 1000))
            actions = engine.advance_clock(script.channel, now)
        else:
            if not pending:
                failure = f"expected bot output ({step.matcher}: {step.pattern!r}) but none was pending"
                failed_step = i
                break
            actual = pending.pop(0)
            if not step.matches(actual):
                failure = (
                    f"bot output mismatch\n  expected {step.matcher}: {step.pattern!r}\n"
                    f"  actual: {actual!r}"
                )
                failed_step = i
                break
            matched += 1
            continue
        pending.extend(a.text for a in actions)
        all_actions.extend(actions)

    return TranscriptResult(
        passed=failure is None,
        failure=failure,
        failed_step=failed_step,
        messages_sent=messages_sent,
        expectations_matched=matched,
        leftover_outputs=pending,
        records=store.records,
        store=store,
        actions=all_actions,
    )


# ----------------------------------------------------------------------
# randomized scripts for determinism/safety property runs

_RANDOM_SAYS = (
    "?commands",
    "?manual",
    "?charter",
    "?start",
    "?stop",
    "?report",
    "?help",
    "?help tours",
    "?help boundary-value-analysis",
    "?reprt",
    "?chart",
    "alpha",
    "beta",
    "Reminders",
    "find crashes around reminders",
    "bug",
    "issue",
    "the app crashed on an empty title",
    "15",
    "2",
    "0",
    "done",
    "cancel",
    "hello there",
)


def random_script(
    seed: int,
    steps: int = 40,
    channel: str = "channel-1",
    users: tuple[str, ...] = ("tester-1", "tester-2"),
) -> TranscriptScript:
    """A reproducible random interleaving of commands, flow replies, clock
    advances, and attachments. Same seed, same script."""
    rng = random.Random(seed)
    out: list[Step] = []
    for n in range(steps):
        roll = rng.random()
        if roll < 0.55:
            text = rng.choice(_RANDOM_SAYS)
            attachments: tuple[Attachment, ...] = ()
            if rng.random() < 0.15:
                attachments = (
                    Attachment(
                        filename=f"shot-{n}.png",
                        media_kind=MediaKind.IMAGE,
                        content_ref=f"att-{n}",
                        size_bytes=rng.randrange(1, 5000),
                    ),
                )
            out.append(SayStep(text=text, user=rng.choice(users), attachments=attachments))
        else:
            out.append(AdvanceStep(seconds=rng.randrange(1, 400)))
    return TranscriptScript(steps=out, channel=channel)

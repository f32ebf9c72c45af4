"""The per-channel conversational engine.

A deterministic state machine: inbound messages and timer events go in,
outbound actions come out, and every one of them is appended to the audit
log before the actions are released (write-ahead discipline). Feeding the
same ordered event sequence to a fresh engine reproduces the same actions
and the same log, byte for byte: ids come from per-channel counters and
all randomness from a per-channel seeded generator.

The hosting process must serialize events per channel; distinct channels
are independent.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass, field

from .config import EngineConfig
from .eventlog import (
    Actor,
    Direction,
    EventRecord,
    EventStore,
    PayloadKind,
)
from .flows import (
    CANCELED_TEXT,
    Charter,
    FlowKind,
    FlowState,
    Report,
    advance_flow,
    initial_prompt,
)
from .knowledge import Catalog, UnknownTopicError, lookup, render_item
from .messages import (
    ActionKind,
    Attachment,
    CommandName,
    InboundMessage,
    InputKind,
    OutboundAction,
    parse_message,
    render_command_list,
    render_manual,
)
from .sessions import (
    SessionTimers,
    TimerEvent,
    TimerKind,
    next_due_event,
    next_suggestion_time,
    pick_suggestion,
    start_session,
)

HALTED_TEXT = (
    "Audit logging failed; this channel is halted to avoid losing the audit trail."
)
NO_SESSION_FOR_REPORT = (
    "There is no active test session. A session must be started with ?start "
    "before you can report."
)
NO_SESSION_TO_STOP = "There is no active session to stop."
ALREADY_ACTIVE = "A session is already active. Stop it with ?stop before starting another."
FLOW_COLLISION = "We are in the middle of another dialog. Finish it or type 'cancel' first."
NO_CHARTERS_YET = (
    "No charters are registered in this channel yet. Create one with ?charter first."
)
EMPTY_CATALOG_NOTICE = "The knowledge catalog is empty; active suggestions are disabled."


def _clock_text(ms: int) -> str:
    total = int(round(ms / 1000))
    return f"{total // 60:02d}:{total % 60:02d}"


@dataclass
class ChannelState:
    """Everything the engine remembers about one channel."""

    channel_id: str
    rng: random.Random
    introduced: bool = False
    halted: bool = False
    open_flow: FlowState | None = None
    charters: dict[str, Charter] = field(default_factory=dict)  # id -> charter, in order
    timers: SessionTimers | None = None
    suggestion_deferred: bool = False
    catalog_notice_sent: bool = False
    last_timestamp: int = -1
    counters: dict[str, int] = field(default_factory=dict)

    def next_id(self, kind: str) -> str:
        n = self.counters.get(kind, 0) + 1
        self.counters[kind] = n
        return f"{kind}-{n}"

    def charter_names(self) -> list[str]:
        return [c.name for c in self.charters.values()]

    def charter_by_name(self, name: str) -> Charter | None:
        for charter in self.charters.values():
            if charter.name == name:
                return charter
        return None

    @property
    def active_session(self):
        if self.timers is not None and self.timers.session.active:
            return self.timers.session
        return None


class Engine:
    """Routes parsed inputs to features and drives the dialog flows."""

    def __init__(self, config: EngineConfig, store: EventStore, catalog: Catalog):
        self.config = config
        self.store = store
        self.catalog = catalog
        self._channels: dict[str, ChannelState] = {}

    def channel(self, channel_id: str) -> ChannelState:
        state = self._channels.get(channel_id)
        if state is None:
            seed = self.config.seed ^ zlib.crc32(channel_id.encode("utf-8"))
            state = ChannelState(
                channel_id=channel_id,
                rng=random.Random(seed),
                introduced=self.store.has_channel(channel_id),
            )
            self._channels[channel_id] = state
        return state

    # ------------------------------------------------------------------
    # event entry points

    def handle_message(self, msg: InboundMessage) -> list[OutboundAction]:
        state = self.channel(msg.channel_id)
        if state.halted:
            return [self._halt_notice(state)]
        if msg.timestamp < state.last_timestamp:
            raise ValueError(
                f"events must arrive in timestamp order on {msg.channel_id}: "
                f"{msg.timestamp} < {state.last_timestamp}"
            )
        try:
            actions = self._drain_timers(state, msg.timestamp)
            state.last_timestamp = msg.timestamp
            actions.extend(self._handle_message_inner(state, msg))
            return actions
        except OSError:
            state.halted = True
            return [self._halt_notice(state)]

    def advance_clock(self, channel_id: str, now: int) -> list[OutboundAction]:
        """Drive virtual time forward, firing every timer due on the way."""
        state = self.channel(channel_id)
        if state.halted:
            return [self._halt_notice(state)]
        if now < state.last_timestamp:
            raise ValueError("clock cannot move backwards")
        try:
            actions = self._drain_timers(state, now)
            state.last_timestamp = now
            return actions
        except OSError:
            state.halted = True
            return [self._halt_notice(state)]

    def handle_timer(self, channel_id: str, event: TimerEvent) -> list[OutboundAction]:
        """Apply one externally-scheduled timer event (normally the engine
        schedules its own through advance_clock)."""
        state = self.channel(channel_id)
        if state.halted:
            return [self._halt_notice(state)]
        try:
            actions = self._apply_timer(state, event)
            state.last_timestamp = max(state.last_timestamp, event.due_at)
            return actions
        except OSError:
            state.halted = True
            return [self._halt_notice(state)]

    def handle_event(
        self, event: InboundMessage | tuple[str, TimerEvent]
    ) -> list[OutboundAction]:
        if isinstance(event, InboundMessage):
            return self.handle_message(event)
        channel_id, timer = event
        return self.handle_timer(channel_id, timer)

    # ------------------------------------------------------------------
    # timers

    def _drain_timers(self, state: ChannelState, now: int) -> list[OutboundAction]:
        # One event at a time: emitting a suggestion schedules the next one,
        # which may itself be due before `now`.
        actions: list[OutboundAction] = []
        while state.timers is not None:
            event = next_due_event(state.timers, now)
            if event is None:
                break
            actions.extend(self._apply_timer(state, event))
        return actions

    def _apply_timer(self, state: ChannelState, event: TimerEvent) -> list[OutboundAction]:
        self._log_timer(state, event)
        if event.kind is TimerKind.REMINDER_DUE:
            return [self._reminder_action(state, event)]
        if event.kind is TimerKind.SUGGESTION_DUE:
            if state.open_flow is not None:
                # Never interrupt a dialog; deliver once the flow closes.
                state.suggestion_deferred = True
                return []
            return self._emit_suggestion(state, event.due_at)
        # SESSION_EXPIRED
        session = state.timers.session if state.timers else None
        if session is not None and session.active:
            session.expire()
            state.suggestion_deferred = False
            self._log_internal(
                state,
                event.due_at,
                "session ended",
                data={
                    "event": "session_ended",
                    "session_id": session.session_id,
                    "end_reason": "expired",
                },
                session_id=session.session_id,
            )
        return []

    def _reminder_action(self, state: ChannelState, event: TimerEvent) -> OutboundAction:
        session = state.timers.session
        remaining = session.ends_at - event.due_at
        if remaining <= 0:
            text = "Time is up! This test session has ended."
        else:
            text = f"Time check: {_clock_text(remaining)} remaining in this session."
        return self._send(
            state,
            ActionKind.REMINDER,
            text,
            timestamp=event.due_at,
            session_id=session.session_id,
        )

    def _emit_suggestion(self, state: ChannelState, at: int) -> list[OutboundAction]:
        timers = state.timers
        session = timers.session
        if not self.catalog.items:
            timers.next_suggestion_at = None
            if state.catalog_notice_sent:
                return []
            state.catalog_notice_sent = True
            return [
                self._send(
                    state,
                    ActionKind.SYSTEM,
                    EMPTY_CATALOG_NOTICE,
                    timestamp=at,
                    session_id=session.session_id,
                )
            ]
        item = pick_suggestion(state.rng, self.catalog)
        action = self._send(
            state,
            ActionKind.SUGGESTION,
            f"While you explore - {render_item(item)}",
            timestamp=at,
            session_id=session.session_id,
            item_id=item.item_id,
        )
        nxt = next_suggestion_time(state.rng, self.config.suggestion_policy, at)
        timers.next_suggestion_at = nxt if nxt <= session.ends_at else None
        return [action]

    def _flush_deferred_suggestion(self, state: ChannelState, now: int) -> list[OutboundAction]:
        if not state.suggestion_deferred:
            return []
        state.suggestion_deferred = False
        if state.active_session is None:
            return []  # session ended while the flow was open: drop it
        return self._emit_suggestion(state, now)

    # ------------------------------------------------------------------
    # messages

    def _handle_message_inner(
        self, state: ChannelState, msg: InboundMessage
    ) -> list[OutboundAction]:
        parsed = parse_message(msg.text, awaiting_flow_input=state.open_flow is not None)
        first_contact = not state.introduced
        state.introduced = True

        inbound = EventRecord(
            timestamp=msg.timestamp,
            channel_id=msg.channel_id,
            actor=Actor.TESTER,
            direction=Direction.INBOUND,
            payload_kind=PayloadKind(parsed.kind.value),
            text=msg.text,
            user_id=msg.user_id,
            session_id=self._session_id(state),
            attachments=msg.attachments,
            flow_id=state.open_flow.flow_id if state.open_flow else None,
        )
        offset = self.store.append(inbound)

        actions: list[OutboundAction] = []
        if first_contact:
            actions.append(
                self._send(state, ActionKind.SYSTEM, self.config.intro_text, msg.timestamp)
            )

        if parsed.kind is InputKind.COMMAND:
            actions.extend(self._handle_command(state, msg, parsed.command, parsed.argument, offset))
        elif parsed.kind is InputKind.INVALID_COMMAND:
            actions.append(
                self._reply(
                    state,
                    msg,
                    offset,
                    f"I do not recognize {parsed.text}. Type ?commands to see what I understand.",
                )
            )
        elif parsed.kind is InputKind.FLOW_REPLY:
            actions.extend(self._handle_flow_input(state, msg, parsed.text, offset))
        else:  # PLAIN
            if state.open_flow is not None and msg.attachments:
                # attachment-only message feeding an open flow
                actions.extend(self._handle_flow_input(state, msg, "", offset))
            # plain chatter is logged but the bot stays out of it
        return actions

    def _handle_command(
        self,
        state: ChannelState,
        msg: InboundMessage,
        command: CommandName,
        argument: str | None,
        offset: int,
    ) -> list[OutboundAction]:
        opens_flow = command in (
            CommandName.CHARTER,
            CommandName.START,
            CommandName.REPORT,
            CommandName.HELP,
        )
        if opens_flow and state.open_flow is not None:
            return [self._reply(state, msg, offset, FLOW_COLLISION)]

        if command is CommandName.COMMANDS:
            return [self._reply(state, msg, offset, render_command_list())]

        if command is CommandName.MANUAL:
            return [self._reply(state, msg, offset, render_manual(self.config.manual_text))]

        if command is CommandName.CHARTER:
            flow = FlowState(state.next_id("flow"), FlowKind.CHARTER, "name", msg.timestamp)
            state.open_flow = flow
            return [self._prompt(state, msg, offset, flow, initial_prompt(flow, [], self.catalog))]

        if command is CommandName.START:
            if state.active_session is not None:
                return [self._reply(state, msg, offset, ALREADY_ACTIVE)]
            flow = FlowState(state.next_id("flow"), FlowKind.START, "duration", msg.timestamp)
            state.open_flow = flow
            return [self._prompt(state, msg, offset, flow, initial_prompt(flow, [], self.catalog))]

        if command is CommandName.STOP:
            return self._handle_stop(state, msg, offset)

        if command is CommandName.REPORT:
            session = state.active_session
            if session is None:
                return [self._reply(state, msg, offset, NO_SESSION_FOR_REPORT)]
            if not state.charters:
                return [self._reply(state, msg, offset, NO_CHARTERS_YET)]
            flow = FlowState(state.next_id("flow"), FlowKind.REPORT, "charter", msg.timestamp)
            flow.collected["session_id"] = session.session_id
            state.open_flow = flow
            return [
                self._prompt(
                    state,
                    msg,
                    offset,
                    flow,
                    initial_prompt(flow, state.charter_names(), self.catalog),
                )
            ]

        # HELP
        return self._handle_help(state, msg, argument, offset)

    def _handle_help(
        self,
        state: ChannelState,
        msg: InboundMessage,
        argument: str | None,
        offset: int,
    ) -> list[OutboundAction]:
        if argument:
            try:
                item = lookup(self.catalog, argument)
            except UnknownTopicError as miss:
                flow = FlowState(state.next_id("flow"), FlowKind.HELP, "topic", msg.timestamp)
                state.open_flow = flow
                if miss.suggestions:
                    hint = "Did you mean: " + ", ".join(miss.suggestions) + "?"
                else:
                    hint = "Options: " + ", ".join(self.catalog.keys()) + "."
                return [
                    self._prompt(
                        state,
                        msg,
                        offset,
                        flow,
                        f"I do not have '{miss.key}'. {hint} Type an option or 'cancel'.",
                    )
                ]
            return [self._reply(state, msg, offset, render_item(item))]
        flow = FlowState(state.next_id("flow"), FlowKind.HELP, "topic", msg.timestamp)
        state.open_flow = flow
        return [self._prompt(state, msg, offset, flow, initial_prompt(flow, [], self.catalog))]

    def _handle_stop(
        self, state: ChannelState, msg: InboundMessage, offset: int
    ) -> list[OutboundAction]:
        session = state.active_session
        if session is None:
            return [self._reply(state, msg, offset, NO_SESSION_TO_STOP)]
        session.stop(msg.timestamp)
        state.suggestion_deferred = False
        self._log_internal(
            state,
            msg.timestamp,
            "session ended",
            data={
                "event": "session_ended",
                "session_id": session.session_id,
                "end_reason": "stopped",
            },
            session_id=session.session_id,
        )
        elapsed = _clock_text(msg.timestamp - session.started_at)
        return [
            self._reply(
                state,
                msg,
                offset,
                f"Session {session.session_id} stopped after {elapsed}. "
                "Use ?start when you are ready for another round.",
            )
        ]

    # ------------------------------------------------------------------
    # flows

    def _handle_flow_input(
        self, state: ChannelState, msg: InboundMessage, text: str, offset: int
    ) -> list[OutboundAction]:
        flow = state.open_flow
        outcome = advance_flow(
            flow, text, msg.attachments, state.charter_names(), self.catalog
        )
        state.open_flow = outcome.flow

        actions: list[OutboundAction] = []
        if outcome.canceled:
            actions.append(self._reply(state, msg, offset, outcome.text, flow_id=flow.flow_id))
        elif outcome.completed and outcome.help_item is not None:
            actions.append(
                self._reply(state, msg, offset, render_item(outcome.help_item), flow_id=flow.flow_id)
            )
        elif outcome.completed:
            actions.append(self._complete_flow(state, msg, flow, offset))
        else:
            actions.append(self._prompt(state, msg, offset, flow, outcome.text))

        if state.open_flow is None:
            actions.extend(self._flush_deferred_suggestion(state, msg.timestamp))
        return actions

    def _complete_flow(
        self, state: ChannelState, msg: InboundMessage, flow: FlowState, offset: int
    ) -> OutboundAction:
        if flow.kind is FlowKind.CHARTER:
            charter = self.register_charter(
                state.channel_id,
                name=flow.collected["name"],
                app_name=flow.collected["app_name"],
                goals=flow.collected["goals"],
                attachments=tuple(flow.collected.get("attachments", ())),
                now=msg.timestamp,
            )
            return self._reply(
                state,
                msg,
                offset,
                f"Charter '{charter.name}' registered ({charter.charter_id}). "
                "Add more with ?charter or begin testing with ?start.",
                flow_id=flow.flow_id,
            )

        if flow.kind is FlowKind.REPORT:
            report = self.file_report(
                state.channel_id,
                session_id=flow.collected["session_id"],
                charter_name=flow.collected["charter_name"],
                report_type=flow.collected["report_type"],
                description=flow.collected["description"],
                attachments=tuple(flow.collected.get("attachments", ())),
                reported_by=msg.user_id,
                now=msg.timestamp,
            )
            text = (
                f"Report {report.report_id} filed: {report.report_type} against "
                f"charter '{flow.collected['charter_name']}'. Thank you!"
            )
            if report.late:
                text += " Note: the session had already ended when you finished this report."
            return self._reply(state, msg, offset, text, flow_id=flow.flow_id)

        if flow.kind is FlowKind.START:
            minutes = flow.collected["duration_minutes"]
            session_id = state.next_id("session")
            state.timers = start_session(
                state.channel_id,
                minutes,
                msg.timestamp,
                session_id,
                self.config.reminder_policy,
                self.config.suggestion_policy,
                state.rng,
            )
            self._log_internal(
                state,
                msg.timestamp,
                "session started",
                data={
                    "event": "session_started",
                    "session_id": session_id,
                    "duration_minutes": minutes,
                },
                session_id=session_id,
            )
            unit = "minute" if minutes == 1 else "minutes"
            return self._reply(
                state,
                msg,
                offset,
                f"Session {session_id} started: {minutes:g} {unit} on the clock. "
                "I will keep an eye on the time for you.",
                flow_id=flow.flow_id,
            )

        raise AssertionError(f"unhandled flow completion: {flow.kind}")

    # ------------------------------------------------------------------
    # persistence ops

    def register_charter(
        self,
        channel_id: str,
        name: str,
        app_name: str,
        goals: str,
        attachments: tuple[Attachment, ...] = (),
        now: int = 0,
    ) -> Charter:
        state = self.channel(channel_id)
        if state.charter_by_name(name) is not None:
            raise ValueError(f"charter name {name!r} already registered in {channel_id}")
        charter = Charter(
            charter_id=state.next_id("charter"),
            channel_id=channel_id,
            name=name,
            app_name=app_name,
            goals=goals,
            created_at=now,
            attachments=attachments,
        )
        state.charters[charter.charter_id] = charter
        self._log_internal(
            state,
            now,
            "charter registered",
            data={
                "event": "charter_registered",
                "charter_id": charter.charter_id,
                "name": name,
                "app_name": app_name,
                "goals": goals,
            },
            attachments=attachments,
        )
        return charter

    def file_report(
        self,
        channel_id: str,
        session_id: str,
        charter_name: str,
        report_type: str,
        description: str,
        reported_by: str,
        attachments: tuple[Attachment, ...] = (),
        now: int = 0,
    ) -> Report:
        state = self.channel(channel_id)
        charter = state.charter_by_name(charter_name)
        if charter is None:
            raise ValueError(f"unknown charter {charter_name!r} in {channel_id}")
        active = state.active_session
        late = active is None or active.session_id != session_id
        report = Report(
            report_id=state.next_id("report"),
            session_id=session_id,
            charter_id=charter.charter_id,
            report_type=report_type,
            description=description,
            reported_at=now,
            reported_by=reported_by,
            attachments=attachments,
            late=late,
        )
        self._log_internal(
            state,
            now,
            "report filed",
            data={
                "event": "report_filed",
                "report_id": report.report_id,
                "session_id": session_id,
                "charter_id": charter.charter_id,
                "report_type": report_type,
                "description": description,
                "late": late,
            },
            session_id=session_id,
            user_id=reported_by,
            attachments=attachments,
        )
        return report

    # ------------------------------------------------------------------
    # logging + action helpers

    def _session_id(self, state: ChannelState) -> str | None:
        session = state.active_session
        return session.session_id if session is not None else None

    def _halt_notice(self, state: ChannelState) -> OutboundAction:
        # Deliberately not logged: the store is the thing that failed.
        return OutboundAction(ActionKind.SYSTEM, state.channel_id, HALTED_TEXT)

    def _send(
        self,
        state: ChannelState,
        kind: ActionKind,
        text: str,
        timestamp: int,
        correlation_id: int | None = None,
        flow_id: str | None = None,
        session_id: str | None = None,
        item_id: str | None = None,
        attachments: tuple[Attachment, ...] = (),
    ) -> OutboundAction:
        record = EventRecord(
            timestamp=timestamp,
            channel_id=state.channel_id,
            actor=Actor.BOT,
            direction=Direction.OUTBOUND,
            payload_kind=PayloadKind(kind.value),
            text=text,
            session_id=session_id if session_id is not None else self._session_id(state),
            attachments=attachments,
            flow_id=flow_id,
            correlation_id=correlation_id,
        )
        self.store.append(record)
        return OutboundAction(
            kind=kind,
            channel_id=state.channel_id,
            text=text,
            attachments=attachments,
            flow_id=flow_id,
            item_id=item_id,
        )

    def _reply(
        self,
        state: ChannelState,
        msg: InboundMessage,
        correlation: int,
        text: str,
        flow_id: str | None = None,
    ) -> OutboundAction:
        return self._send(
            state,
            ActionKind.REPLY,
            text,
            timestamp=msg.timestamp,
            correlation_id=correlation,
            flow_id=flow_id,
        )

    def _prompt(
        self,
        state: ChannelState,
        msg: InboundMessage,
        correlation: int,
        flow: FlowState,
        text: str,
    ) -> OutboundAction:
        return self._send(
            state,
            ActionKind.PROMPT,
            text,
            timestamp=msg.timestamp,
            correlation_id=correlation,
            flow_id=flow.flow_id,
        )

    def _log_timer(self, state: ChannelState, event: TimerEvent) -> None:
        text = event.kind.value
        if event.fraction is not None:
            text += f" {event.fraction:g}"
        record = EventRecord(
            timestamp=event.due_at,
            channel_id=state.channel_id,
            actor=Actor.BOT,
            direction=Direction.INTERNAL,
            payload_kind=PayloadKind.TIMER,
            text=text,
            session_id=event.session_id,
            data={"kind": event.kind.value, "fraction": event.fraction},
        )
        self.store.append(record)

    def _log_internal(
        self,
        state: ChannelState,
        timestamp: int,
        text: str,
        data: dict,
        session_id: str | None = None,
        user_id: str | None = None,
        attachments: tuple[Attachment, ...] = (),
    ) -> None:
        record = EventRecord(
            timestamp=timestamp,
            channel_id=state.channel_id,
            actor=Actor.TESTER if user_id else Actor.BOT,
            direction=Direction.INTERNAL,
            payload_kind=PayloadKind.SYSTEM,
            text=text,
            user_id=user_id,
            session_id=session_id,
            attachments=attachments,
            data=data,
        )
        self.store.append(record)

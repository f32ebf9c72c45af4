"""Append-only audit log: every message, timer tick, and lifecycle event.

The log is the system's ground truth. There is deliberately no update or
delete anywhere in this module; auditability means the past is immutable.
Charters, reports, and session lifecycle land in the same sequence as
internal records, so one file replays the whole story of a channel.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .messages import Attachment, MediaKind

SCHEMA_NAME = "etbot-audit"
SCHEMA_VERSION = 1


class Actor(Enum):
    BOT = "bot"
    TESTER = "tester"


class Direction(Enum):
    INBOUND = "inbound"
    OUTBOUND = "outbound"
    INTERNAL = "internal"


class PayloadKind(Enum):
    COMMAND = "command"
    INVALID_COMMAND = "invalid_command"
    FLOW_REPLY = "flow_reply"
    PLAIN = "plain"
    REPLY = "reply"
    PROMPT = "prompt"
    REMINDER = "reminder"
    SUGGESTION = "suggestion"
    SYSTEM = "system"
    TIMER = "timer"


_INBOUND_KINDS = {
    PayloadKind.COMMAND,
    PayloadKind.INVALID_COMMAND,
    PayloadKind.FLOW_REPLY,
    PayloadKind.PLAIN,
}
_OUTBOUND_KINDS = {
    PayloadKind.REPLY,
    PayloadKind.PROMPT,
    PayloadKind.REMINDER,
    PayloadKind.SUGGESTION,
    PayloadKind.SYSTEM,
}
_INTERNAL_KINDS = {PayloadKind.TIMER, PayloadKind.SYSTEM}


class RecordInvariantError(ValueError):
    """Record violates a field invariant and must not enter the log."""


@dataclass
class EventRecord:
    timestamp: int
    channel_id: str
    actor: Actor
    direction: Direction
    payload_kind: PayloadKind
    text: str = ""
    user_id: str | None = None
    session_id: str | None = None
    attachments: tuple[Attachment, ...] = ()
    flow_id: str | None = None
    correlation_id: int | None = None
    data: dict[str, Any] | None = None
    offset: int = -1  # assigned by the store on append

    def validate(self) -> None:
        if self.direction is Direction.INBOUND:
            if self.payload_kind not in _INBOUND_KINDS:
                raise RecordInvariantError(
                    f"inbound record cannot carry payload {self.payload_kind.value}"
                )
            if self.actor is not Actor.TESTER or not self.user_id:
                raise RecordInvariantError("inbound records need a tester user_id")
        elif self.direction is Direction.OUTBOUND:
            if self.payload_kind not in _OUTBOUND_KINDS:
                raise RecordInvariantError(
                    f"outbound record cannot carry payload {self.payload_kind.value}"
                )
            if self.actor is not Actor.BOT:
                raise RecordInvariantError("outbound records belong to the bot")
            if self.payload_kind is PayloadKind.REPLY and self.correlation_id is None:
                raise RecordInvariantError("reply records must carry a correlation_id")
            if (
                self.payload_kind in (PayloadKind.REMINDER, PayloadKind.SUGGESTION)
                and self.correlation_id is not None
            ):
                raise RecordInvariantError(
                    "reminder/suggestion records carry no correlation_id"
                )
        else:
            if self.payload_kind not in _INTERNAL_KINDS:
                raise RecordInvariantError(
                    f"internal record cannot carry payload {self.payload_kind.value}"
                )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "offset": self.offset,
            "timestamp": self.timestamp,
            "channel_id": self.channel_id,
            "actor": self.actor.value,
            "direction": self.direction.value,
            "payload_kind": self.payload_kind.value,
            "text": self.text,
        }
        if self.user_id is not None:
            out["user_id"] = self.user_id
        if self.session_id is not None:
            out["session_id"] = self.session_id
        if self.attachments:
            out["attachments"] = [
                {
                    "filename": a.filename,
                    "media_kind": a.media_kind.value,
                    "content_ref": a.content_ref,
                    "size_bytes": a.size_bytes,
                }
                for a in self.attachments
            ]
        if self.flow_id is not None:
            out["flow_id"] = self.flow_id
        if self.correlation_id is not None:
            out["correlation_id"] = self.correlation_id
        if self.data is not None:
            out["data"] = self.data
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "EventRecord":
        attachments = tuple(
            Attachment(
                filename=a["filename"],
                media_kind=MediaKind(a["media_kind"]),
                content_ref=a["content_ref"],
                size_bytes=a.get("size_bytes", 0),
            )
            for a in raw.get("attachments", ())
        )
        return cls(
            offset=raw["offset"],
            timestamp=raw["timestamp"],
            channel_id=raw["channel_id"],
            actor=Actor(raw["actor"]),
            direction=Direction(raw["direction"]),
            payload_kind=PayloadKind(raw["payload_kind"]),
            text=raw.get("text", ""),
            user_id=raw.get("user_id"),
            session_id=raw.get("session_id"),
            attachments=attachments,
            flow_id=raw.get("flow_id"),
            correlation_id=raw.get("correlation_id"),
            data=raw.get("data"),
        )


def _record_line(record: EventRecord) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))


class EventStore:
    """In-memory append-only record sequence with channel/session indexes."""

    def __init__(self) -> None:
        self._records: list[EventRecord] = []

    def append(self, record: EventRecord) -> int:
        record.validate()
        record.offset = len(self._records)
        self._records.append(record)
        return record.offset

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[EventRecord]:
        return list(self._records)

    def has_channel(self, channel_id: str) -> bool:
        return any(r.channel_id == channel_id for r in self._records)

    def query(
        self,
        channel_id: str | None = None,
        session_id: str | None = None,
        offset_range: tuple[int, int] | None = None,
    ) -> list[EventRecord]:
        """Filtered records in offset order; offset_range is [start, end)."""
        out: Iterable[EventRecord] = self._records
        if offset_range is not None:
            start, end = offset_range
            out = (r for r in out if start <= r.offset < end)
        if channel_id is not None:
            out = (r for r in out if r.channel_id == channel_id)
        if session_id is not None:
            out = (r for r in out if r.session_id == session_id)
        return list(out)

    def serialize(self) -> str:
        """Header plus one JSON line per record; byte-stable across replays."""
        lines = [json.dumps({"schema": SCHEMA_NAME, "version": SCHEMA_VERSION})]
        lines.extend(_record_line(r) for r in self._records)
        return "\n".join(lines) + "\n"


class FileEventStore(EventStore):
    """Line-delimited JSON file backing; each append is flushed before the
    corresponding outbound action is released (write-ahead discipline).
    """

    def __init__(self, path: str | Path, fsync: bool = False) -> None:
        super().__init__()
        self.path = Path(path)
        self._fsync = fsync
        if self.path.exists() and self.path.stat().st_size > 0:
            self._load()
            self._fh = open(self.path, "a", encoding="utf-8")
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="utf-8")
            self._fh.write(json.dumps({"schema": SCHEMA_NAME, "version": SCHEMA_VERSION}) + "\n")
            self._fh.flush()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("schema") != SCHEMA_NAME:
                raise ValueError(f"{self.path} is not an audit log (bad header)")
            if header.get("version") != SCHEMA_VERSION:
                raise ValueError(
                    f"{self.path}: unsupported schema version {header.get('version')}"
                )
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = EventRecord.from_dict(json.loads(line))
                self._records.append(record)

    def append(self, record: EventRecord) -> int:
        offset = super().append(record)
        self._fh.write(_record_line(record) + "\n")
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())
        return offset

    def close(self) -> None:
        self._fh.close()


def load_log(path: str | Path) -> list[EventRecord]:
    """Read an audit-log file back into records (offset order)."""
    store = FileEventStore(path)
    try:
        return store.records
    finally:
        store.close()

"""Frame codec for the chat gateway's WebSocket protocol.

One JSON text payload per frame; transport framing belongs to the
WebSocket layer. Attachments travel as named references obtained from the
side upload endpoint, which keeps chat frames small. The codec is a
bijection on valid frames: decode(encode(f)) == f.

Frame schema (documented field by field in docs/wire-protocol.md):
  type         hello | message | action | error | ping
  seq          int >= 0, strictly increasing per connection and direction
  channel      channel id
  user         display name ("bot" on bot actions)
  text         message body; on hello frames the protocol version
  attachments  [{filename, media_kind, ref, size_bytes}], omitted if empty
  kind         action frames only: reply|prompt|reminder|suggestion|system
  session      server->client session metadata {active, remaining_seconds}
  error        error frames: human-readable diagnostic
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

PROTOCOL_VERSION = "1"
DEFAULT_MAX_FRAME_BYTES = 65536


class FrameType(Enum):
    HELLO = "hello"
    MESSAGE = "message"
    ACTION = "action"
    ERROR = "error"
    PING = "ping"


@dataclass(frozen=True)
class AttachmentRef:
    filename: str
    media_kind: str
    ref: str
    size_bytes: int = 0


@dataclass(frozen=True)
class WireFrame:
    type: FrameType
    seq: int
    channel: str = ""
    user: str = ""
    text: str = ""
    attachments: tuple[AttachmentRef, ...] = ()
    kind: str | None = None
    session: tuple[tuple[str, Any], ...] | None = None  # sorted items, hashable
    error: str | None = None

    @staticmethod
    def session_payload(active: bool, remaining_seconds: float) -> tuple[tuple[str, Any], ...]:
        return (("active", active), ("remaining_seconds", remaining_seconds))


def error_frame(diagnostic: str, seq: int = 0) -> WireFrame:
    return WireFrame(type=FrameType.ERROR, seq=seq, error=diagnostic)


def encode_frame(frame: WireFrame) -> bytes:
    """Canonical encoding: fixed key order, empty fields omitted."""
    out: dict[str, Any] = {"type": frame.type.value, "seq": frame.seq}
    if frame.channel:
        out["channel"] = frame.channel
    if frame.user:
        out["user"] = frame.user
    if frame.text:
        out["text"] = frame.text
    if frame.attachments:
        out["attachments"] = [
            {
                "filename": a.filename,
                "media_kind": a.media_kind,
                "ref": a.ref,
                "size_bytes": a.size_bytes,
            }
            for a in frame.attachments
        ]
    if frame.kind is not None:
        out["kind"] = frame.kind
    if frame.session is not None:
        out["session"] = dict(frame.session)
    if frame.error is not None:
        out["error"] = frame.error
    return json.dumps(out, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_frame(payload: bytes | str, max_bytes: int = DEFAULT_MAX_FRAME_BYTES) -> WireFrame:
    """Parse and structurally validate one frame.

    Never raises on bad input: malformed or oversized payloads come back
    as an ERROR frame carrying the diagnostic, so the connection can stay
    alive.
    """
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    if len(data) > max_bytes:
        return error_frame(f"oversized frame: {len(data)} bytes > limit {max_bytes}")
    try:
        raw = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        return error_frame(f"malformed frame: {exc}")
    if not isinstance(raw, dict):
        return error_frame("malformed frame: payload must be a JSON object")

    type_name = raw.get("type")
    try:
        frame_type = FrameType(type_name)
    except ValueError:
        return error_frame(f"unknown frame type: {type_name!r}")

    seq = raw.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        return error_frame(f"malformed frame: seq must be a non-negative integer, got {seq!r}")

    for key in ("channel", "user", "text"):
        if key in raw and not isinstance(raw[key], str):
            return error_frame(f"malformed frame: {key} must be a string")

    attachments: list[AttachmentRef] = []
    for entry in raw.get("attachments", []):
        if not isinstance(entry, dict) or not entry.get("filename") or not entry.get("ref"):
            return error_frame(f"malformed frame: bad attachment entry {entry!r}")
        size = entry.get("size_bytes", 0)
        if not isinstance(size, int) or size < 0:
            return error_frame("malformed frame: attachment size_bytes must be >= 0")
        attachments.append(
            AttachmentRef(
                filename=str(entry["filename"]),
                media_kind=str(entry.get("media_kind", "file")),
                ref=str(entry["ref"]),
                size_bytes=size,
            )
        )

    kind = raw.get("kind")
    if kind is not None and not isinstance(kind, str):
        return error_frame("malformed frame: kind must be a string")

    session = None
    if "session" in raw:
        sess = raw["session"]
        if not isinstance(sess, dict):
            return error_frame("malformed frame: session must be an object")
        session = tuple(sorted(sess.items()))

    error = raw.get("error")
    if error is not None and not isinstance(error, str):
        return error_frame("malformed frame: error must be a string")

    return WireFrame(
        type=frame_type,
        seq=seq,
        channel=raw.get("channel", ""),
        user=raw.get("user", ""),
        text=raw.get("text", ""),
        attachments=tuple(attachments),
        kind=kind,
        session=session,
        error=error,
    )

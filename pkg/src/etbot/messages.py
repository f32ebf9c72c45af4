"""Message vocabulary and command parsing.

Everything a tester types lands here first. Messages that start with '?'
are commands for the bot; anything else is either a reply to an open
dialog or plain channel chatter the bot stays out of.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class CommandName(Enum):
    COMMANDS = "commands"
    MANUAL = "manual"
    CHARTER = "charter"
    START = "start"
    STOP = "stop"
    REPORT = "report"
    HELP = "help"


class MediaKind(Enum):
    IMAGE = "image"
    FILE = "file"


@dataclass(frozen=True)
class Attachment:
    filename: str
    media_kind: MediaKind
    content_ref: str
    size_bytes: int = 0

    def __post_init__(self) -> None:
        if not self.filename:
            raise ValueError("attachment filename must be non-empty")
        if self.size_bytes < 0:
            raise ValueError("attachment size_bytes must be >= 0")


@dataclass(frozen=True)
class InboundMessage:
    """One message a tester sent into a channel.

    Timestamps are virtual milliseconds supplied by whoever drives the
    engine (transcript runner or wall-clock adapter), monotone
    non-decreasing per channel.
    """

    channel_id: str
    user_id: str
    text: str
    timestamp: int
    attachments: tuple[Attachment, ...] = ()

    def __post_init__(self) -> None:
        if not self.text and not self.attachments:
            raise ValueError("message needs text or at least one attachment")


class InputKind(Enum):
    COMMAND = "command"
    INVALID_COMMAND = "invalid_command"
    FLOW_REPLY = "flow_reply"
    PLAIN = "plain"


@dataclass(frozen=True)
class ParsedInput:
    kind: InputKind
    command: CommandName | None = None
    argument: str | None = None
    text: str = ""


class ActionKind(Enum):
    REPLY = "reply"
    PROMPT = "prompt"
    REMINDER = "reminder"
    SUGGESTION = "suggestion"
    SYSTEM = "system"


@dataclass(frozen=True)
class OutboundAction:
    """One message the bot sends back to a channel."""

    kind: ActionKind
    channel_id: str
    text: str
    attachments: tuple[Attachment, ...] = ()
    flow_id: str | None = None
    item_id: str | None = None


_COMMANDS_BY_NAME = {c.value: c for c in CommandName}


def parse_message(text: str, awaiting_flow_input: bool = False) -> ParsedInput:
    """Classify raw chat text into exactly one input kind.

    Total and deterministic: every (text, flag) pair maps to one
    ParsedInput. Command matching is case-insensitive and tolerates
    whitespace around and after the '?' prefix. Unknown '?'-words come
    back as INVALID_COMMAND so they can be logged and counted.
    """
    stripped = text.strip()
    if stripped.startswith("?"):
        body = stripped[1:].strip()
        name, _, rest = body.partition(" ")
        command = _COMMANDS_BY_NAME.get(name.lower())
        if command is None:
            return ParsedInput(InputKind.INVALID_COMMAND, text=stripped)
        argument = rest.strip() or None
        return ParsedInput(InputKind.COMMAND, command=command, argument=argument)
    if stripped and awaiting_flow_input:
        return ParsedInput(InputKind.FLOW_REPLY, text=stripped)
    return ParsedInput(InputKind.PLAIN, text=stripped)


_COMMAND_DESCRIPTIONS = [
    (CommandName.COMMANDS, "list all commands I understand"),
    (CommandName.MANUAL, "step-by-step guide to running a test session"),
    (CommandName.CHARTER, "register a test charter (name, app, goals, attachments)"),
    (CommandName.START, "start a time-boxed test session"),
    (CommandName.STOP, "end the active test session early"),
    (CommandName.REPORT, "report a bug or issue found during the session"),
    (CommandName.HELP, "browse the testing knowledge base"),
]


def render_command_list() -> str:
    """Stable listing of every command with a one-line description."""
    lines = ["Here is what I understand:"]
    for command, description in _COMMAND_DESCRIPTIONS:
        lines.append(f"  ?{command.value:<9}- {description}")
    return "\n".join(lines)


def render_manual(manual_text: str) -> str:
    """Return the configured step-by-step procedure verbatim.

    Empty manual content is a configuration error and is rejected at
    startup (see config.EngineConfig), never here.
    """
    return manual_text

"""Multi-step dialog flows: charter registration, bug/issue reporting,
session start, and help-topic navigation.

A flow holds the channel captive for one question at a time. Every
accepted input advances exactly one step; anything else re-asks the same
question. 'cancel' bails out of any flow at any step so a typo can never
lock the channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .knowledge import Catalog, KnowledgeItem, UnknownTopicError, lookup, list_topics
from .messages import Attachment

CANCEL_WORDS = {"cancel"}
FINISH_WORDS = {"done", "finish"}

CANCELED_TEXT = "Okay, canceled. Nothing was saved."


class FlowKind(Enum):
    CHARTER = "charter"
    REPORT = "report"
    START = "start"
    HELP = "help"


# Step sequences, in order. Attachment steps are optional and terminated
# by a finish keyword.
CHARTER_STEPS = ("name", "app_name", "goals", "attachments")
REPORT_STEPS = ("charter", "type", "description", "attachments")
START_STEPS = ("duration",)
HELP_STEPS = ("topic",)


@dataclass
class FlowState:
    flow_id: str
    kind: FlowKind
    step: str
    started_at: int
    collected: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Charter:
    charter_id: str
    channel_id: str
    name: str
    app_name: str
    goals: str
    created_at: int
    attachments: tuple[Attachment, ...] = ()

    def __post_init__(self) -> None:
        if not (self.name and self.app_name and self.goals):
            raise ValueError("charter name, app_name and goals must be non-empty")


@dataclass(frozen=True)
class Report:
    report_id: str
    session_id: str
    charter_id: str
    report_type: str  # "bug" | "issue"
    description: str
    reported_at: int
    reported_by: str
    attachments: tuple[Attachment, ...] = ()
    late: bool = False  # session ended between flow start and completion

    def __post_init__(self) -> None:
        if self.report_type not in ("bug", "issue"):
            raise ValueError(f"report_type must be bug or issue, got {self.report_type!r}")
        if not self.description:
            raise ValueError("report description must be non-empty")


@dataclass
class FlowOutcome:
    """What one advance produced: the flow's next shape and the text to send."""

    flow: FlowState | None  # still open (same or next step), None when closed
    text: str
    is_prompt: bool = True  # False → engine sends a Reply instead of a Prompt
    completed: bool = False
    canceled: bool = False
    help_item: KnowledgeItem | None = None


def initial_prompt(flow: FlowState, charter_names: list[str], catalog: Catalog) -> str:
    return _prompt_for(flow, charter_names, catalog)


def _prompt_for(flow: FlowState, charter_names: list[str], catalog: Catalog) -> str:
    key = (flow.kind, flow.step)
    if key == (FlowKind.CHARTER, "name"):
        return "What should this charter be called?"
    if key == (FlowKind.CHARTER, "app_name"):
        return "Which app is under test?"
    if key == (FlowKind.CHARTER, "goals"):
        return "What are the goals of this charter - what do you want to learn or verify?"
    if key == (FlowKind.CHARTER, "attachments"):
        return "Attach any images or files for the charter, then say 'done' (or 'done' to skip)."
    if key == (FlowKind.REPORT, "charter"):
        names = ", ".join(charter_names)
        return f"Which charter does this belong to? Registered charters: {names}"
    if key == (FlowKind.REPORT, "type"):
        return "Is this a bug or an issue?"
    if key == (FlowKind.REPORT, "description"):
        return "Describe what you found, in as much detail as you can."
    if key == (FlowKind.REPORT, "attachments"):
        return "Attach screenshots or files if you have them, then say 'done' (or 'done' to skip)."
    if key == (FlowKind.START, "duration"):
        return "What is the time limit for this session, in minutes?"
    if key == (FlowKind.HELP, "topic"):
        return (
            list_topics(catalog)
            + "\nType one of the options above for details, or 'cancel' to close."
        )
    raise AssertionError(f"no prompt for {key}")


def advance_flow(
    flow: FlowState,
    text: str,
    attachments: tuple[Attachment, ...],
    charter_names: list[str],
    catalog: Catalog,
) -> FlowOutcome:
    """Feed one tester input to the open flow.

    Exactly one outbound text comes back: the next step's prompt, a
    re-prompt for the same step, or (completed/canceled) the text the
    engine should fold into its closing Reply.
    """
    word = text.strip().casefold()
    if word in CANCEL_WORDS:
        return FlowOutcome(flow=None, text=CANCELED_TEXT, is_prompt=False, canceled=True)

    if flow.kind is FlowKind.CHARTER:
        return _advance_charter(flow, text, attachments, charter_names, catalog)
    if flow.kind is FlowKind.REPORT:
        return _advance_report(flow, text, attachments, charter_names, catalog)
    if flow.kind is FlowKind.START:
        return _advance_start(flow, text)
    return _advance_help(flow, text, catalog)


def _reprompt(flow: FlowState, text: str) -> FlowOutcome:
    return FlowOutcome(flow=flow, text=text)


def _next_step(
    flow: FlowState, steps: tuple[str, ...], charter_names: list[str], catalog: Catalog
) -> FlowOutcome:
    flow.step = steps[steps.index(flow.step) + 1]
    return FlowOutcome(flow=flow, text=_prompt_for(flow, charter_names, catalog))


def _advance_attachments(flow: FlowState, text: str, attachments: tuple[Attachment, ...]) -> FlowOutcome:
    collected: list[Attachment] = flow.collected.setdefault("attachments", [])
    collected.extend(attachments)
    if text.strip().casefold() in FINISH_WORDS:
        return FlowOutcome(flow=None, text="", is_prompt=False, completed=True)
    if attachments:
        return _reprompt(flow, "Got it. Anything else? Say 'done' when you are finished.")
    return _reprompt(flow, "Attach a file, or say 'done' to finish.")


def _advance_charter(
    flow: FlowState,
    text: str,
    attachments: tuple[Attachment, ...],
    charter_names: list[str],
    catalog: Catalog,
) -> FlowOutcome:
    if flow.step == "attachments":
        return _advance_attachments(flow, text, attachments)
    value = text.strip()
    if not value:
        return _reprompt(flow, "This field cannot be empty - please try again.")
    if flow.step == "name":
        if value in charter_names:
            return _reprompt(
                flow,
                f"There is already a charter called '{value}' in this channel. Pick another name.",
            )
        flow.collected["name"] = value
    elif flow.step == "app_name":
        flow.collected["app_name"] = value
    elif flow.step == "goals":
        flow.collected["goals"] = value
    return _next_step(flow, CHARTER_STEPS, charter_names, catalog)


def _advance_report(
    flow: FlowState,
    text: str,
    attachments: tuple[Attachment, ...],
    charter_names: list[str],
    catalog: Catalog,
) -> FlowOutcome:
    if flow.step == "attachments":
        return _advance_attachments(flow, text, attachments)
    value = text.strip()
    if not value:
        return _reprompt(flow, "This field cannot be empty - please try again.")
    if flow.step == "charter":
        if value not in charter_names:
            names = ", ".join(charter_names)
            return _reprompt(
                flow,
                f"I do not know that charter. Registered charters: {names}. "
                "Type one of those names.",
            )
        flow.collected["charter_name"] = value
    elif flow.step == "type":
        kind = value.casefold()
        if kind not in ("bug", "issue"):
            return _reprompt(flow, "Please answer 'bug' or 'issue' (or 'cancel' to abort).")
        flow.collected["report_type"] = kind
    elif flow.step == "description":
        flow.collected["description"] = value
    return _next_step(flow, REPORT_STEPS, charter_names, catalog)


def _advance_start(flow: FlowState, text: str) -> FlowOutcome:
    try:
        minutes = float(text.strip())
    except ValueError:
        minutes = -1.0
    if minutes <= 0:
        return _reprompt(
            flow, "Please give the time limit as a positive number of minutes (e.g. 15)."
        )
    flow.collected["duration_minutes"] = minutes
    return FlowOutcome(flow=None, text="", is_prompt=False, completed=True)


def _advance_help(flow: FlowState, text: str, catalog: Catalog) -> FlowOutcome:
    try:
        item = lookup(catalog, text)
    except UnknownTopicError as miss:
        if miss.suggestions:
            hint = "Did you mean: " + ", ".join(miss.suggestions) + "?"
        else:
            hint = "Options: " + ", ".join(catalog.keys()) + "."
        return _reprompt(
            flow, f"I do not have '{miss.key}'. {hint} Type an option or 'cancel'."
        )
    return FlowOutcome(flow=None, text="", is_prompt=False, completed=True, help_item=item)

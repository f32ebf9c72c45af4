"""etbot: a chat assistant for time-boxed exploratory test sessions.

Testers drive everything through '?'-prefixed commands: register charters,
start and stop sessions, report bugs and issues through guided dialogs,
and browse a curated testing knowledge base. The bot reminds about the
remaining time, drops randomized testing suggestions, and appends every
exchanged message to an auditable event log that the analytics turn into
active/reactive interaction tables and bug statistics.
"""

from .analytics import (
    BugStats,
    InteractionClass,
    MetricsTable,
    PhaseSpan,
    bug_stats,
    bug_stats_from_log,
    classify,
    interaction_table,
)
from .config import ConfigError, EngineConfig, load_config
from .engine import Engine
from .eventlog import (
    Actor,
    Direction,
    EventRecord,
    EventStore,
    FileEventStore,
    PayloadKind,
    load_log,
)
from .flows import Charter, Report
from .knowledge import (
    Catalog,
    CatalogError,
    KnowledgeItem,
    load_catalog,
    load_default_catalog,
    list_topics,
    lookup,
)
from .messages import (
    ActionKind,
    Attachment,
    CommandName,
    InboundMessage,
    MediaKind,
    OutboundAction,
    ParsedInput,
    parse_message,
    render_command_list,
)
from .sessions import (
    ReminderPolicy,
    Session,
    SuggestionPolicy,
    TimerEvent,
    due_events,
    next_suggestion_time,
    pick_suggestion,
    start_session,
)
from .transcript import TranscriptScript, load_script, random_script, run_transcript
from .wire import PROTOCOL_VERSION, WireFrame, decode_frame, encode_frame

__version__ = "0.1.0"

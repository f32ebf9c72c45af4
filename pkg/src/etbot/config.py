"""Engine and service configuration.

One YAML file, overridable by ETBOT_* environment variables, overridable
again by CLI flags: flags win over env, env over file, file over the
built-in defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .sessions import ReminderPolicy, SuggestionPolicy

DEFAULT_INTRO = (
    "Hello! I am your exploratory-testing assistant. I will help you run "
    "time-boxed test sessions, keep charters and bug reports in one place, "
    "and log every message here so the whole session stays auditable.\n"
    "Type ?manual for a step-by-step guide, ?commands to see everything I "
    "understand, or ?start to begin a session right away."
)

DEFAULT_MANUAL = (
    "How a test session works:\n"
    "  1. Register at least one charter with ?charter - it states the goal of "
    "your exploration.\n"
    "  2. Start a time-boxed session with ?start and give the time limit in "
    "minutes.\n"
    "  3. Explore the app under test. I will remind you about the remaining "
    "time and occasionally drop a testing idea.\n"
    "  4. Report every bug or issue right away with ?report - screenshots "
    "can be attached.\n"
    "  5. Browse testing techniques anytime with ?help; end early with ?stop "
    "if you are done."
)


class ConfigError(Exception):
    """Configuration is unusable; startup must abort with this diagnostic."""


@dataclass(frozen=True)
class EngineConfig:
    intro_text: str = DEFAULT_INTRO
    manual_text: str = DEFAULT_MANUAL
    reminder_fractions: tuple[float, ...] = (0.5, 0.8, 1.0)
    suggestion_min_gap_s: int = 180
    suggestion_initial_delay_s: int = 120
    seed: int = 20240601
    catalog_path: str | None = None  # None -> packaged seed catalog
    store_path: str = "etbot-audit.log"
    attachments_dir: str = "etbot-attachments"
    host: str = "127.0.0.1"
    port: int = 8765
    tick_interval_s: float = 1.0
    max_frame_bytes: int = 65536

    @property
    def reminder_policy(self) -> ReminderPolicy:
        return ReminderPolicy(self.reminder_fractions)

    @property
    def suggestion_policy(self) -> SuggestionPolicy:
        return SuggestionPolicy(
            min_gap_s=self.suggestion_min_gap_s,
            initial_delay_s=self.suggestion_initial_delay_s,
            seed=self.seed,
        )

    def validate(self) -> "EngineConfig":
        if not self.intro_text.strip():
            raise ConfigError("intro_text must not be empty")
        if not self.manual_text.strip():
            raise ConfigError("manual_text must not be empty")
        try:
            self.reminder_policy
            self.suggestion_policy
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.max_frame_bytes <= 0:
            raise ConfigError("max_frame_bytes must be > 0")
        if self.tick_interval_s <= 0:
            raise ConfigError("tick_interval_s must be > 0")
        return self


_ENV_FIELDS: dict[str, tuple[str, Any]] = {
    "ETBOT_INTRO_TEXT": ("intro_text", str),
    "ETBOT_MANUAL_TEXT": ("manual_text", str),
    "ETBOT_SEED": ("seed", int),
    "ETBOT_CATALOG_PATH": ("catalog_path", str),
    "ETBOT_STORE_PATH": ("store_path", str),
    "ETBOT_ATTACHMENTS_DIR": ("attachments_dir", str),
    "ETBOT_HOST": ("host", str),
    "ETBOT_PORT": ("port", int),
    "ETBOT_TICK_INTERVAL_S": ("tick_interval_s", float),
    "ETBOT_MAX_FRAME_BYTES": ("max_frame_bytes", int),
    "ETBOT_MIN_GAP_S": ("suggestion_min_gap_s", int),
    "ETBOT_INITIAL_DELAY_S": ("suggestion_initial_delay_s", int),
}

_FIELD_NAMES = {f.name for f in fields(EngineConfig)}


def _from_file(path: Path) -> dict[str, Any]:
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    unknown = set(doc) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(sorted(unknown))}")
    if "reminder_fractions" in doc:
        doc["reminder_fractions"] = tuple(float(f) for f in doc["reminder_fractions"])
    return doc


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    **overrides: Any,
) -> EngineConfig:
    """Assemble the effective config: defaults < file < env < overrides."""
    values: dict[str, Any] = {}
    if path is not None:
        values.update(_from_file(Path(path)))
    env = os.environ if env is None else env
    for env_name, (field_name, cast) in _ENV_FIELDS.items():
        if env_name in env:
            try:
                values[field_name] = cast(env[env_name])
            except ValueError as exc:
                raise ConfigError(f"bad value for {env_name}: {env[env_name]!r}") from exc
    for key, value in overrides.items():
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config override: {key}")
        if value is not None:
            values[key] = value
    return EngineConfig(**values).validate()

"""Curated exploratory-testing knowledge catalog.

Three groups of items power ?help and the active suggestions: black-box
test design criteria, named exploration tours, and mobile-app testing
guidelines. The catalog is data, not code: it ships as a YAML file so
teams can tailor the content per project without touching the bot.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import yaml


class KnowledgeGroup(Enum):
    CRITERIA = "criteria"
    TOURS = "tours"
    MOBILE_GUIDELINES = "mobile-guidelines"


GROUP_HEADINGS = {
    KnowledgeGroup.CRITERIA: "Test design criteria",
    KnowledgeGroup.TOURS: "Exploration tours",
    KnowledgeGroup.MOBILE_GUIDELINES: "Mobile app guidelines",
}


class CatalogError(Exception):
    """Catalog file failed validation; message names the offending entry."""


@dataclass(frozen=True)
class KnowledgeItem:
    item_id: str
    group: KnowledgeGroup
    title: str
    body: str
    follow_up_questions: tuple[str, ...] = ()


@dataclass(frozen=True)
class Catalog:
    items: tuple[KnowledgeItem, ...]
    version: str

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for item in self.items:
            if item.item_id in seen:
                raise CatalogError(f"duplicate slug: {item.item_id!r}")
            seen.add(item.item_id)

    def by_id(self, item_id: str) -> KnowledgeItem | None:
        for item in self.items:
            if item.item_id == item_id:
                return item
        return None

    def keys(self) -> list[str]:
        return [item.item_id for item in self.items]


class UnknownTopicError(KeyError):
    """Lookup miss; carries nearby keys for the re-prompt."""

    def __init__(self, key: str, suggestions: list[str]):
        super().__init__(key)
        self.key = key
        self.suggestions = suggestions


def list_topics(catalog: Catalog) -> str:
    """Grouped listing of every item, in group order then catalog order."""
    lines = []
    for group in KnowledgeGroup:
        group_items = [i for i in catalog.items if i.group is group]
        if not group_items:
            continue
        lines.append(f"{GROUP_HEADINGS[group]}:")
        for item in group_items:
            lines.append(f"  {item.item_id} - {item.title}")
    return "\n".join(lines)


def lookup(catalog: Catalog, key: str) -> KnowledgeItem:
    """Resolve a topic by slug, falling back to a case-insensitive title match.

    Raises UnknownTopicError with prefix-matched candidate keys on a miss.
    """
    wanted = key.strip()
    item = catalog.by_id(wanted)
    if item is not None:
        return item
    folded = wanted.casefold()
    for candidate in catalog.items:
        if candidate.title.casefold() == folded:
            return candidate
    suggestions = [k for k in catalog.keys() if k.startswith(folded)]
    raise UnknownTopicError(wanted, suggestions)


def render_item(item: KnowledgeItem) -> str:
    """Body text for a Reply, with follow-up questions appended when present."""
    parts = [f"{item.title}\n{item.body}"]
    if item.follow_up_questions:
        parts.append("Some questions to think about:")
        parts.extend(f"  - {q}" for q in item.follow_up_questions)
    return "\n".join(parts)


_GROUPS_BY_NAME = {g.value: g for g in KnowledgeGroup}


def load_catalog(source: str | Path) -> Catalog:
    """Load and validate a catalog file; failures abort startup.

    Each diagnostic names the offending entry so a bad edit is easy to
    find: duplicate slug, unknown group, and empty body are distinct
    errors.
    """
    raw = Path(source).read_text(encoding="utf-8")
    return parse_catalog(raw)


def parse_catalog(raw: str) -> Catalog:
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise CatalogError(f"catalog is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "items" not in doc:
        raise CatalogError("catalog must be a mapping with an 'items' list")
    version = str(doc.get("version", "0"))
    items = []
    for entry in doc["items"]:
        if not isinstance(entry, dict):
            raise CatalogError(f"item entries must be mappings, got: {entry!r}")
        item_id = str(entry.get("id", "")).strip()
        if not item_id:
            raise CatalogError(f"item with empty id: {entry!r}")
        group_name = str(entry.get("group", "")).strip()
        group = _GROUPS_BY_NAME.get(group_name)
        if group is None:
            raise CatalogError(f"unknown group {group_name!r} on item {item_id!r}")
        title = str(entry.get("title", "")).strip()
        if not title:
            raise CatalogError(f"empty title on item {item_id!r}")
        body = str(entry.get("body", "")).strip()
        if not body:
            raise CatalogError(f"empty body on item {item_id!r}")
        questions = tuple(str(q) for q in entry.get("questions", []) or ())
        items.append(KnowledgeItem(item_id, group, title, body, questions))
    return Catalog(items=tuple(items), version=version)


def default_catalog_path() -> Path:
    return Path(str(resources.files("etbot").joinpath("data/catalog.yaml")))


def load_default_catalog() -> Catalog:
    return load_catalog(default_catalog_path())

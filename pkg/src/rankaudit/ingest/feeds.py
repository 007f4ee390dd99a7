"""PyPI syndication feeds (new packages / new releases)."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime
from email.utils import parsedate_to_datetime
from typing import Literal
from urllib.parse import urlsplit

from rankaudit.errors import ConfigurationError, NotFoundError, ParseError
from rankaudit.ingest.transport import FetchPolicy, Fetcher
from rankaudit.model import to_utc

FeedKind = Literal["new_packages", "new_releases"]

FEED_URLS: dict[str, str] = {
    "new_packages": "https://pypi.org/rss/packages.xml",
    "new_releases": "https://pypi.org/rss/updates.xml",
}


@dataclass(frozen=True)
class FeedEntry:
    name: str
    version: str | None
    published_at: datetime
    feed_kind: str


def _name_version(link: str | None, title: str | None) -> tuple[str, str | None]:
    # links look like https://pypi.org/project/<name>/[<version>/]
    if link:
        parts = [p for p in urlsplit(link.strip()).path.split("/") if p]
        if len(parts) >= 2 and parts[0] == "project":
            return parts[1], (parts[2] if len(parts) >= 3 else None)
    if title:
        words = title.split()
        if len(words) >= 2 and words[1:] != ["added", "to", "PyPI"]:
            return words[0], words[1]
        if words:
            return words[0], None
    raise ValueError("item has neither a project link nor a title")


def parse_feed(document: bytes, kind: str) -> list[FeedEntry]:
    """Parse an RSS 2.0 document into entries in document order."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise ParseError(f"malformed feed: {exc}") from exc
    channel = root.find("channel")
    if channel is None:
        raise ParseError("feed has no channel element")
    entries = []
    for item in channel.findall("item"):
        try:
            name, version = _name_version(item.findtext("link"), item.findtext("title"))
            published = to_utc(parsedate_to_datetime(item.findtext("pubDate") or ""))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad feed item: {exc}") from exc
        if kind == "new_packages":
            version = None
        entries.append(FeedEntry(name, version, published, kind))
    return entries


def fetch_feed(
    kind: FeedKind,
    cutoff: datetime,
    policy: FetchPolicy,
    fetcher: Fetcher | None = None,
) -> list[FeedEntry]:
    """Entries strictly newer than ``cutoff``, newest first, unique per (name, version)."""
    if kind not in FEED_URLS:
        raise ConfigurationError(f"unknown feed kind {kind!r}")
    fetcher = fetcher or Fetcher(policy)
    try:
        body = fetcher.get("feeds", f"{kind}.xml", FEED_URLS[kind])
    except NotFoundError as exc:
        if policy.offline:
            raise ConfigurationError(f"offline mode needs a {kind} feed fixture") from exc
        raise
    cutoff = to_utc(cutoff)
    seen: set[tuple[str, str | None]] = set()
    out = []
    for entry in parse_feed(body, kind):
        key = (entry.name.lower(), entry.version)
        if entry.published_at <= cutoff or key in seen:
            continue
        seen.add(key)
        out.append(entry)
    return out

"""Package metadata from the PyPI JSON API."""

from __future__ import annotations

import json
import re
from datetime import datetime

from packaging.requirements import InvalidRequirement, Requirement

from rankaudit.errors import ParseError
from rankaudit.ingest.transport import FetchPolicy, Fetcher
from rankaudit.model import (
    PackageSnapshot,
    Release,
    normalize_name,
    parse_timestamp,
    split_repo_url,
    utcnow,
)

PYPI_JSON = "https://pypi.org/pypi/{name}/json"

FORGE_HOSTS = ("github.com", "gitlab.com", "bitbucket.org")

# project_urls labels that usually point at the source repository
_REPO_LABELS = ("source", "source code", "repository", "code", "github", "gitlab", "git")


def _forge_url(url: str | None) -> str | None:
    if not url:
        return None
    try:
        host, _, _ = split_repo_url(url)
    except ValueError:
        return None
    return url if host in FORGE_HOSTS else None


def _pick_repo_url(info: dict) -> str | None:
    project_urls = info.get("project_urls") or {}
    labelled = sorted(project_urls.items(), key=lambda kv: kv[0].lower())
    for label, url in labelled:
        if label.strip().lower() in _REPO_LABELS and _forge_url(url):
            return url
    for _, url in labelled:
        if _forge_url(url):
            return url
    return _forge_url(info.get("home_page"))


def _homepage(info: dict) -> str | None:
    if info.get("home_page"):
        return info["home_page"]
    for label, url in (info.get("project_urls") or {}).items():
        if label.strip().lower() == "homepage":
            return url
    return None


def _keywords(raw) -> tuple[str, ...]:
    if not raw:
        return ()
    if isinstance(raw, list):
        words = raw
    else:
        words = re.split(r"[,\s]+", raw)
    return tuple(w.strip() for w in words if w.strip())


def _dependencies(requires_dist) -> tuple[tuple[str, str], ...]:
    deps = []
    for line in requires_dist or ():
        try:
            req = Requirement(line)
        except InvalidRequirement:
            continue
        if req.marker is not None and "extra" in str(req.marker):
            continue
        deps.append((req.name, str(req.specifier)))
    return tuple(deps)


def parse_package_document(document: bytes, captured_at: datetime) -> PackageSnapshot:
    """Map a PyPI JSON document onto a partial snapshot.

    Registry-side counts (dependents, subscribers) are not published by PyPI
    and stay at zero; see :func:`rankaudit.ingest.librariesio.enrich_snapshot`.
    """
    try:
        doc = json.loads(document)
        info = doc["info"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed package document: {exc}") from exc
    releases = []
    for version, files in (doc.get("releases") or {}).items():
        times = [
            parse_timestamp(f.get("upload_time_iso_8601") or f["upload_time"])
            for f in files or ()
            if f.get("upload_time_iso_8601") or f.get("upload_time")
        ]
        if times:
            releases.append(Release(version, min(times)))
    releases.sort(key=lambda r: (r.published_at, r.version_text))
    if releases:
        captured_at = max(captured_at, releases[-1].published_at)
    return PackageSnapshot(
        name=info["name"],
        description=info.get("summary") or None,
        homepage_url=_homepage(info),
        repo_url=_pick_repo_url(info),
        keywords=_keywords(info.get("keywords")),
        releases=tuple(releases),
        dependencies=_dependencies(info.get("requires_dist")),
        captured_at=captured_at,
    )


def fetch_package_metadata(
    name: str,
    policy: FetchPolicy,
    fetcher: Fetcher | None = None,
    now: datetime | None = None,
) -> PackageSnapshot:
    fetcher = fetcher or Fetcher(policy)
    key = normalize_name(name)
    body = fetcher.get("pypi", f"{key}.json", PYPI_JSON.format(name=key))
    return parse_package_document(body, now or utcnow())

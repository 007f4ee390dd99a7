"""Repository metadata from a code forge (GitHub REST API)."""

from __future__ import annotations

import base64
import configparser
import json
import re
from datetime import datetime

from rankaudit.errors import NotFoundError, ParseError, UnsupportedHostError
from rankaudit.ingest.transport import FetchPolicy, Fetcher
from rankaudit.model import (
    RepoSnapshot,
    format_timestamp,
    repo_from_record,
    split_repo_url,
    utcnow,
)

GITHUB_API = "https://api.github.com"
SUPPORTED_HOSTS = ("github.com",)
MANIFESTS = ("pyproject.toml", "setup.cfg", "setup.py")

_LAST_PAGE = re.compile(r'[?&]page=(\d+)[^>]*>;\s*rel="last"')
_TOML_SECTION = re.compile(r"^\s*\[([^\]]+)\]\s*$")
_TOML_NAME = re.compile(r"""^\s*name\s*=\s*["']([^"']+)["']""")
_SETUP_PY_NAME = re.compile(r"""\bname\s*=\s*["']([A-Za-z0-9._-]+)["']""")


def manifest_names(filename: str, text: str) -> list[str]:
    """Package names declared in a packaging manifest (best effort, no execution)."""
    if filename == "pyproject.toml":
        names, section = [], None
        for line in text.splitlines():
            m = _TOML_SECTION.match(line)
            if m:
                section = m.group(1).strip()
                continue
            if section in ("project", "tool.poetry", "tool.flit.metadata"):
                m = _TOML_NAME.match(line)
                if m:
                    names.append(m.group(1))
        return names
    if filename == "setup.cfg":
        cfg = configparser.ConfigParser(interpolation=None)
        try:
            cfg.read_string(text)
        except configparser.Error:
            return []
        name = cfg.get("metadata", "name", fallback=None)
        return [name] if name else []
    if filename == "setup.py":
        return _SETUP_PY_NAME.findall(text)[:1]
    return []


class GitHubClient:
    def __init__(self, fetcher: Fetcher):
        self.fetcher = fetcher
        token = fetcher.policy.credential(fetcher.policy.token_env)
        self.headers = {"Accept": "application/vnd.github+json"}
        if token:
            self.headers["Authorization"] = f"Bearer {token}"

    def _json(self, path: str):
        resp = self.fetcher.request(f"{GITHUB_API}{path}", self.headers)
        try:
            return json.loads(resp.body), resp.headers
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed forge response for {path}: {exc}") from exc

    def _optional(self, path: str):
        try:
            return self._json(path)[0]
        except NotFoundError:
            return None

    def snapshot_document(self, owner: str, name: str, now: datetime) -> dict:
        base = f"/repos/{owner}/{name}"
        repo, _ = self._json(base)
        contributors, headers = self._json(f"{base}/contributors?per_page=1&anon=1")
        m = _LAST_PAGE.search(headers.get("Link", headers.get("link", "")))
        contributors_count = int(m.group(1)) if m else len(contributors or [])
        releases = self._optional(f"{base}/releases?per_page=100") or []
        tags = [
            [r["tag_name"], r["published_at"]]
            for r in releases
            if r.get("tag_name") and r.get("published_at")
        ]
        declared: list[str] = []
        for filename in MANIFESTS:
            content = self._optional(f"{base}/contents/{filename}")
            if content and content.get("encoding") == "base64":
                text = base64.b64decode(content["content"]).decode("utf-8", "replace")
                declared.extend(manifest_names(filename, text))
        return {
            "url": repo.get("html_url") or f"https://github.com/{owner}/{name}",
            "stars": int(repo.get("stargazers_count", 0)),
            "contributors_count": contributors_count,
            "has_readme": self._optional(f"{base}/readme") is not None,
            "tags": tags,
            "manifest_package_names": sorted(set(declared)),
            "captured_at": format_timestamp(now),
        }


def fetch_repo_metadata(
    url: str,
    policy: FetchPolicy,
    fetcher: Fetcher | None = None,
    now: datetime | None = None,
) -> RepoSnapshot:
    try:
        host, owner, name = split_repo_url(url)
    except ValueError as exc:
        raise UnsupportedHostError(str(exc)) from exc
    if host not in SUPPORTED_HOSTS:
        raise UnsupportedHostError(f"unsupported forge host {host!r}")
    fetcher = fetcher or Fetcher(policy)
    client = GitHubClient(fetcher)

    def build() -> bytes:
        doc = client.snapshot_document(owner, name, now or utcnow())
        return json.dumps(doc, sort_keys=True).encode()

    body = fetcher.cached_document("forge", f"{host}/{owner}/{name}.json", build)
    try:
        return repo_from_record(json.loads(body))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed repository document for {url}: {exc}") from exc

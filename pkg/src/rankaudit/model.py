"""Core domain types: package/repository snapshots, labels and the snapshot store."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Literal, Sequence
from urllib.parse import urlsplit

from rankaudit import semver
from rankaudit.errors import DuplicateNameError, LabelConflictError, ParseError

logger = logging.getLogger(__name__)

Status = Literal["active", "deprecated", "unmaintained", "removed"]
STATUSES: tuple[str, ...] = ("active", "deprecated", "unmaintained", "removed")
VERDICTS: tuple[str, ...] = ("benign", "malicious")
LABEL_SOURCES: tuple[str, ...] = ("osv", "manual", "synthetic")

_SEPARATOR_RUN = re.compile(r"[-_.]+")


def normalize_name(text: str) -> str:
    """Registry-canonical package name: lowercase, separator runs collapsed to '-'."""
    if not text or not text.strip():
        raise ValueError("package name is empty")
    return _SEPARATOR_RUN.sub("-", text.strip().lower())


def strip_separators(name: str) -> str:
    return _SEPARATOR_RUN.sub("", name)


# -- timestamps ---------------------------------------------------------------


def to_utc(value: datetime) -> datetime:
    """Coerce to an aware UTC datetime truncated to whole seconds.

    Naive datetimes are taken to already be in UTC.
    """
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).replace(microsecond=0)


def parse_timestamp(text: str) -> datetime:
    try:
        value = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except (AttributeError, ValueError) as exc:
        raise ParseError(f"bad timestamp {text!r}") from exc
    return to_utc(value)


def format_timestamp(value: datetime) -> str:
    return to_utc(value).strftime("%Y-%m-%dT%H:%M:%SZ")


def utcnow() -> datetime:
    return to_utc(datetime.now(timezone.utc))


# -- repository URLs ----------------------------------------------------------

_SCP_URL = re.compile(r"^[\w.-]+@(?P<host>[\w.-]+):(?P<path>.+)$")


def split_repo_url(url: str) -> tuple[str, str, str]:
    """Return (host, owner, name) for a forge URL, lowercased.

    Accepts https/http/git+https/ssh URLs and scp-style ``git@host:owner/name``.
    Anything past ``owner/name`` (``/tree/main``, ``#readme``) is dropped.
    """
    text = url.strip()
    m = _SCP_URL.match(text)
    if m:
        host, path = m.group("host"), m.group("path")
    else:
        if "://" not in text:
            text = "https://" + text
        if text.startswith("git+"):
            text = text[4:]
        parts = urlsplit(text)
        host = parts.hostname or ""
        path = parts.path
    host = host.lower()
    if host.startswith("www."):
        host = host[4:]
    segments = [s for s in path.split("/") if s]
    if not host or len(segments) < 2:
        raise ValueError(f"not a repository URL: {url!r}")
    owner, name = segments[0].lower(), segments[1].lower()
    if name.endswith(".git"):
        name = name[:-4]
    if not name:
        raise ValueError(f"not a repository URL: {url!r}")
    return host, owner, name


def canonical_repo_url(url: str) -> str:
    host, owner, name = split_repo_url(url)
    return f"https://{host}/{owner}/{name}"


# -- domain types ---------------------------------------------------------------


@dataclass(frozen=True)
class Release:
    version_text: str
    published_at: datetime
    is_prerelease: bool = field(init=False)

    def __post_init__(self):
        if not self.version_text:
            raise ValueError("release version is empty")
        object.__setattr__(self, "published_at", to_utc(self.published_at))
        try:
            pre = bool(semver.parse_semver(self.version_text).prerelease)
        except semver.SemverError:
            pre = False
        object.__setattr__(self, "is_prerelease", pre)


@dataclass(frozen=True)
class PackageSnapshot:
    name: str
    captured_at: datetime
    description: str | None = None
    homepage_url: str | None = None
    repo_url: str | None = None
    keywords: tuple[str, ...] = ()
    releases: tuple[Release, ...] = ()
    dependents_count: int = 0
    dependent_repos_count: int = 0
    subscribers_count: int = 0
    dependencies: tuple[tuple[str, str], ...] = ()
    status: Status = "active"
    normalized_name: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "normalized_name", normalize_name(self.name))
        object.__setattr__(self, "captured_at", to_utc(self.captured_at))
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "releases", tuple(self.releases))
        object.__setattr__(
            self, "dependencies", tuple((str(n), str(c)) for n, c in self.dependencies)
        )
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        for attr in ("dependents_count", "dependent_repos_count", "subscribers_count"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{attr} must be non-negative")
        times = [r.published_at for r in self.releases]
        if times != sorted(times):
            raise ValueError("releases must be sorted by publish time")
        if times and times[-1] > self.captured_at:
            raise ValueError("captured_at precedes a release")


@dataclass(frozen=True)
class RepoSnapshot:
    url: str
    captured_at: datetime
    stars: int = 0
    contributors_count: int = 0
    has_readme: bool = False
    tags: tuple[tuple[str, datetime], ...] = ()
    manifest_package_names: tuple[str, ...] = ()
    host: str = field(init=False)
    owner: str = field(init=False)
    name: str = field(init=False)

    def __post_init__(self):
        host, owner, name = split_repo_url(self.url)
        object.__setattr__(self, "url", f"https://{host}/{owner}/{name}")
        object.__setattr__(self, "host", host)
        object.__setattr__(self, "owner", owner)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "captured_at", to_utc(self.captured_at))
        object.__setattr__(self, "tags", tuple((str(n), to_utc(t)) for n, t in self.tags))
        object.__setattr__(self, "manifest_package_names", tuple(self.manifest_package_names))
        if self.stars < 0 or self.contributors_count < 0:
            raise ValueError("repository counts must be non-negative")

    @property
    def slug(self) -> str:
        return f"{self.owner}/{self.name}"


@dataclass(frozen=True)
class Label:
    name: str
    verdict: Literal["benign", "malicious"]
    source: Literal["osv", "manual", "synthetic"]
    advisory_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "name", normalize_name(self.name))
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.source not in LABEL_SOURCES:
            raise ValueError(f"unknown label source {self.source!r}")
        if self.source == "osv" and not self.advisory_id:
            raise ValueError("osv labels need an advisory id")


@dataclass(frozen=True)
class CorpusEntry:
    package: PackageSnapshot
    repo: RepoSnapshot | None
    label: Label


@dataclass(frozen=True)
class LabeledCorpus:
    entries: tuple[CorpusEntry, ...]
    evaluation_time: datetime
    excluded: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "evaluation_time", to_utc(self.evaluation_time))
        names = [e.package.normalized_name for e in self.entries]
        if len(names) != len(set(names)):
            raise DuplicateNameError("duplicate package names in corpus")

    def __len__(self) -> int:
        return len(self.entries)

    def with_label(self, verdict: str) -> list[CorpusEntry]:
        return [e for e in self.entries if e.label.verdict == verdict]


# -- serialization --------------------------------------------------------------


def _opt_time(value):
    return None if value is None else format_timestamp(value)


def package_to_record(pkg: PackageSnapshot) -> dict:
    return {
        "name": pkg.name,
        "normalized_name": pkg.normalized_name,
        "description": pkg.description,
        "homepage_url": pkg.homepage_url,
        "repo_url": pkg.repo_url,
        "keywords": list(pkg.keywords),
        "releases": [
            {
                "version_text": r.version_text,
                "published_at": format_timestamp(r.published_at),
                "is_prerelease": r.is_prerelease,
            }
            for r in pkg.releases
        ],
        "dependents_count": pkg.dependents_count,
        "dependent_repos_count": pkg.dependent_repos_count,
        "subscribers_count": pkg.subscribers_count,
        "dependencies": [list(d) for d in pkg.dependencies],
        "status": pkg.status,
        "captured_at": format_timestamp(pkg.captured_at),
    }


def package_from_record(rec: dict) -> PackageSnapshot:
    return PackageSnapshot(
        name=rec["name"],
        description=rec.get("description"),
        homepage_url=rec.get("homepage_url"),
        repo_url=rec.get("repo_url"),
        keywords=tuple(rec.get("keywords") or ()),
        releases=tuple(
            Release(r["version_text"], parse_timestamp(r["published_at"]))
            for r in rec.get("releases") or ()
        ),
        dependents_count=int(rec.get("dependents_count", 0)),
        dependent_repos_count=int(rec.get("dependent_repos_count", 0)),
        subscribers_count=int(rec.get("subscribers_count", 0)),
        dependencies=tuple(tuple(d) for d in rec.get("dependencies") or ()),
        status=rec.get("status", "active"),
        captured_at=parse_timestamp(rec["captured_at"]),
    )


def repo_to_record(repo: RepoSnapshot) -> dict:
    return {
        "url": repo.url,
        "host": repo.host,
        "owner": repo.owner,
        "name": repo.name,
        "stars": repo.stars,
        "contributors_count": repo.contributors_count,
        "has_readme": repo.has_readme,
        "tags": [[n, format_timestamp(t)] for n, t in repo.tags],
        "manifest_package_names": list(repo.manifest_package_names),
        "captured_at": format_timestamp(repo.captured_at),
    }


def repo_from_record(rec: dict) -> RepoSnapshot:
    return RepoSnapshot(
        url=rec["url"],
        stars=int(rec.get("stars", 0)),
        contributors_count=int(rec.get("contributors_count", 0)),
        has_readme=bool(rec.get("has_readme", False)),
        tags=tuple((n, parse_timestamp(t)) for n, t in rec.get("tags") or ()),
        manifest_package_names=tuple(rec.get("manifest_package_names") or ()),
        captured_at=parse_timestamp(rec["captured_at"]),
    )


def label_to_record(label: Label) -> dict:
    return {
        "name": label.name,
        "verdict": label.verdict,
        "source": label.source,
        "advisory_id": label.advisory_id,
    }


def label_from_record(rec: dict) -> Label:
    return Label(rec["name"], rec["verdict"], rec["source"], rec.get("advisory_id"))


def _dump_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _read_records(path: str | Path) -> Iterable[tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed record: {exc.msg}", line=lineno) from exc
            if not isinstance(rec, dict):
                raise ParseError("record is not an object", line=lineno)
            yield lineno, rec


def _write_lines(lines: Iterable[str], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


Snapshot = tuple[PackageSnapshot, "RepoSnapshot | None"]


def load_snapshots(path: str | Path) -> list[Snapshot]:
    """Read a line-delimited snapshot file, one ``{"package", "repo"}`` object per line."""
    out: list[Snapshot] = []
    seen: dict[str, int] = {}
    for lineno, rec in _read_records(path):
        try:
            pkg = package_from_record(rec["package"])
            repo = repo_from_record(rec["repo"]) if rec.get("repo") else None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid snapshot: {exc!r}", line=lineno) from exc
        if pkg.normalized_name in seen:
            raise DuplicateNameError(
                f"{pkg.normalized_name!r} on lines {seen[pkg.normalized_name]} and {lineno}"
            )
        seen[pkg.normalized_name] = lineno
        out.append((pkg, repo))
    return out


def save_snapshots(snapshots: Sequence[Snapshot], path: str | Path) -> None:
    _write_lines(
        (
            _dump_line(
                {
                    "package": package_to_record(pkg),
                    "repo": repo_to_record(repo) if repo is not None else None,
                }
            )
            for pkg, repo in snapshots
        ),
        path,
    )


def load_labels(path: str | Path) -> list[Label]:
    labels = []
    for lineno, rec in _read_records(path):
        try:
            labels.append(label_from_record(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid label: {exc!r}", line=lineno) from exc
    return labels


def save_labels(labels: Sequence[Label], path: str | Path) -> None:
    _write_lines((_dump_line(label_to_record(lb)) for lb in labels), path)


def load_corpus(path: str | Path, evaluation_time: datetime) -> LabeledCorpus:
    """Read a corpus file: snapshot records that also carry a ``label`` object."""
    entries = []
    for lineno, rec in _read_records(path):
        try:
            entries.append(
                CorpusEntry(
                    package_from_record(rec["package"]),
                    repo_from_record(rec["repo"]) if rec.get("repo") else None,
                    label_from_record(rec["label"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid corpus entry: {exc!r}", line=lineno) from exc
    return LabeledCorpus(tuple(entries), evaluation_time)


def save_corpus(corpus: LabeledCorpus, path: str | Path) -> None:
    _write_lines(
        (
            _dump_line(
                {
                    "package": package_to_record(e.package),
                    "repo": repo_to_record(e.repo) if e.repo is not None else None,
                    "label": label_to_record(e.label),
                }
            )
            for e in corpus.entries
        ),
        path,
    )


def merge_labels(
    snapshots: Sequence[Snapshot],
    labels: Sequence[Label],
    evaluation_time: datetime,
    assume_benign: bool = False,
) -> LabeledCorpus:
    """Join snapshots with ground-truth labels by normalized name.

    Unlabeled snapshots are dropped (and counted in ``excluded``) unless
    ``assume_benign`` is set, in which case they get a manual benign label.
    """
    by_name: dict[str, Label] = {}
    for label in labels:
        prior = by_name.get(label.name)
        if prior is None:
            by_name[label.name] = label
        elif prior.verdict != label.verdict:
            raise LabelConflictError(
                f"{label.name!r}: {prior.verdict} ({prior.source}) vs "
                f"{label.verdict} ({label.source})"
            )
    entries = []
    excluded = 0
    for pkg, repo in snapshots:
        label = by_name.get(pkg.normalized_name)
        if label is None:
            if not assume_benign:
                excluded += 1
                continue
            label = Label(pkg.normalized_name, "benign", "manual")
        entries.append(CorpusEntry(pkg, repo, label))
    logger.info("merged %d labeled snapshots, excluded %d", len(entries), excluded)
    return LabeledCorpus(tuple(entries), evaluation_time, excluded=excluded)

"""Checks whether a package's declared repository really belongs to it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Mapping, Sequence

from rankaudit.errors import DuplicateNameError, ParseError
from rankaudit.model import (
    PackageSnapshot,
    RepoSnapshot,
    canonical_repo_url,
    normalize_name,
    split_repo_url,
    strip_separators,
)

CORRELATION_TOLERANCE = timedelta(hours=24)
CORRELATION_THRESHOLD = 0.8
CORRELATION_MIN_MATCHES = 3

EXACT = "exact"
PREFIX = "prefix_augmented"
SUFFIX = "suffix_augmented"
SMALL_EDIT = "small_edit"
UNRELATED = "unrelated"

VERIFIED = "verified"
CONFUSED = "confused"
UNVERIFIABLE = "unverifiable"


def damerau_levenshtein(a: str, b: str) -> int:
    """Optimal-string-alignment distance; an adjacent transposition costs 1."""
    if a == b:
        return 0
    prev2: list[int] | None = None
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if (
                prev2 is not None
                and i > 1
                and j > 1
                and a[i - 1] == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                cur[j] = min(cur[j], prev2[j - 2] + 1)
        prev2, prev = prev, cur
    return prev[len(b)]


@dataclass(frozen=True)
class NameRelation:
    kind: str
    edit_distance: int
    detail: str = ""

    @property
    def is_suspicious(self) -> bool:
        return self.kind in (PREFIX, SUFFIX, SMALL_EDIT)


def name_relation(pkg_name: str, target_name: str) -> NameRelation:
    """Classify how ``pkg_name`` relates to ``target_name`` (both normalized)."""
    a, b = normalize_name(pkg_name), normalize_name(target_name)
    sa, sb = strip_separators(a), strip_separators(b)
    distance = damerau_levenshtein(sa, sb)
    if a == b:
        return NameRelation(EXACT, 0, f"{a} == {b}")
    ta, tb = a.split("-"), b.split("-")
    if len(ta) > len(tb):
        if ta[-len(tb):] == tb:
            extra = "-".join(ta[: len(ta) - len(tb)])
            return NameRelation(PREFIX, distance, f"{a} = {extra!r} + {b}")
        if ta[: len(tb)] == tb:
            extra = "-".join(ta[len(tb):])
            return NameRelation(SUFFIX, distance, f"{a} = {b} + {extra!r}")
    if distance == 1:
        return NameRelation(SMALL_EDIT, 1, f"{sa} ~ {sb}")
    if distance == 0:
        # same letters, separators differ ("fakeuseragent" vs "fake-useragent")
        return NameRelation(SMALL_EDIT, 1, f"{a} ~ {b} (separators only)")
    return NameRelation(UNRELATED, distance, f"{a} vs {b}")


@dataclass(frozen=True)
class CorrelationScore:
    matched: int
    total: int

    @property
    def score(self) -> float:
        return self.matched / self.total if self.total else 0.0


def correlate_releases(
    releases: Sequence,
    tags: Sequence[tuple[str, datetime]],
    tolerance: timedelta = CORRELATION_TOLERANCE,
) -> CorrelationScore:
    """Match releases to repository tags by timestamp, nearest pairs first.

    Each tag can back at most one release.
    """
    candidates = []
    for i, release in enumerate(releases):
        for j, (_, tagged_at) in enumerate(tags):
            gap = abs(release.published_at - tagged_at)
            if gap <= tolerance:
                candidates.append((gap, i, j))
    candidates.sort()
    used_releases: set[int] = set()
    used_tags: set[int] = set()
    for _, i, j in candidates:
        if i in used_releases or j in used_tags:
            continue
        used_releases.add(i)
        used_tags.add(j)
    return CorrelationScore(len(used_releases), len(releases))


@dataclass(frozen=True)
class RepoRegistry:
    """Known repositories and the legitimate package that owns each one."""

    owners: Mapping[str, str] = field(default_factory=dict)
    stars: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Sequence[Mapping]) -> "RepoRegistry":
        owners: dict[str, str] = {}
        stars: dict[str, int] = {}
        for rec in records:
            url = canonical_repo_url(rec["repo_url"])
            name = normalize_name(rec["package_name"])
            if owners.get(url, name) != name:
                raise DuplicateNameError(f"{url} owned by both {owners[url]} and {name}")
            owners[url] = name
            if rec.get("stars") is not None:
                stars[url] = int(rec["stars"])
        return cls(owners, stars)

    def owner_of(self, url: str) -> str | None:
        try:
            return self.owners.get(canonical_repo_url(url))
        except ValueError:
            return None

    def repo_of(self, package: str) -> str | None:
        for url, owner in sorted(self.owners.items()):
            if owner == package:
                return url
        return None

    def package_names(self) -> list[str]:
        return sorted(set(self.owners.values()))


def load_registry(path: str | Path) -> RepoRegistry:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed registry record: {exc.msg}", line=lineno) from exc
    return RepoRegistry.from_records(records)


@dataclass(frozen=True)
class Evidence:
    rule: str
    finding: str
    positive: bool = False

    def render(self) -> str:
        return f"{self.rule}: {self.finding}"


@dataclass(frozen=True)
class ConfusionVerdict:
    verdict: str
    evidence: tuple[Evidence, ...]
    victim: str | None = None
    victim_repo: str | None = None

    def __post_init__(self):
        if self.verdict == CONFUSED and not self.victim:
            raise ValueError("a confused verdict must name its victim")
        if self.verdict == VERIFIED and not any(e.positive for e in self.evidence):
            raise ValueError("a verified verdict needs positive evidence")

    def as_record(self, pkg: PackageSnapshot) -> dict:
        return {
            "name": pkg.normalized_name,
            "repo_url": pkg.repo_url,
            "verdict": self.verdict,
            "victim": self.victim,
            "victim_repo": self.victim_repo,
            "evidence": [e.render() for e in self.evidence],
        }


def _slug(url: str | None) -> str | None:
    if not url:
        return None
    _, owner, name = split_repo_url(url)
    return f"{owner}/{name}"


def classify_repo_claim(
    pkg: PackageSnapshot,
    repo: RepoSnapshot | None,
    registry: RepoRegistry,
) -> ConfusionVerdict:
    """Decide whether ``pkg``'s repository URL genuinely refers to ``pkg``.

    Rules run in order: registry ownership, manifest back-reference, name
    relation to the repo and to registry packages, then release/tag timing.
    """
    name = pkg.normalized_name
    evidence: list[Evidence] = []
    if not pkg.repo_url:
        return ConfusionVerdict(UNVERIFIABLE, (Evidence("claim", "no claim"),))
    try:
        claimed = canonical_repo_url(pkg.repo_url)
    except ValueError:
        return ConfusionVerdict(
            UNVERIFIABLE, (Evidence("claim", f"not a repository URL: {pkg.repo_url}"),)
        )
    slug = _slug(claimed)

    owner = registry.owner_of(claimed)
    if owner is not None:
        if owner == name:
            evidence.append(Evidence("registry", f"{slug} owned by {owner}", positive=True))
            return ConfusionVerdict(VERIFIED, tuple(evidence))
        evidence.append(Evidence("registry", f"{slug} owned by {owner}"))
        relation = name_relation(name, owner)
        evidence.append(Evidence("name", f"{relation.kind} to {owner}, distance {relation.edit_distance}"))
        return ConfusionVerdict(CONFUSED, tuple(evidence), victim=owner, victim_repo=slug)
    evidence.append(Evidence("registry", f"{slug} not registered"))

    if repo is not None:
        declared = {normalize_name(n) for n in repo.manifest_package_names if n.strip()}
        if name in declared:
            evidence.append(Evidence("manifest", f"{slug} declares {name}", positive=True))
            return ConfusionVerdict(VERIFIED, tuple(evidence))
        evidence.append(Evidence("manifest", f"declared: {sorted(declared) or 'none'}"))

    repo_name = normalize_name(claimed.rsplit("/", 1)[-1])
    relation = name_relation(name, repo_name)
    evidence.append(
        Evidence(
            "name",
            f"{relation.kind} to repo {repo_name}, distance {relation.edit_distance}",
            positive=relation.kind == EXACT,
        )
    )
    if relation.kind == EXACT:
        return ConfusionVerdict(VERIFIED, tuple(evidence))
    if relation.is_suspicious:
        return ConfusionVerdict(CONFUSED, tuple(evidence), victim=repo_name, victim_repo=slug)
    for known in registry.package_names():
        relation = name_relation(name, known)
        if relation.is_suspicious:
            evidence.append(
                Evidence("name", f"{relation.kind} to registered {known}, distance {relation.edit_distance}")
            )
            return ConfusionVerdict(
                CONFUSED, tuple(evidence), victim=known, victim_repo=_slug(registry.repo_of(known))
            )

    if repo is not None:
        corr = correlate_releases(pkg.releases, repo.tags)
        ok = corr.score >= CORRELATION_THRESHOLD and corr.matched >= CORRELATION_MIN_MATCHES
        evidence.append(
            Evidence(
                "correlation",
                f"{corr.matched}/{corr.total} releases match tags" + (" (weak)" if ok else ""),
                positive=ok,
            )
        )
        if ok:
            return ConfusionVerdict(VERIFIED, tuple(evidence))
    return ConfusionVerdict(UNVERIFIABLE, tuple(evidence))

"""Simulated score-inflation techniques applied to package/repo snapshots.

Every technique returns modified copies; nothing here touches a live registry.
An attacker is assumed rational: a manipulation that would lower the score is
not carried out.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import ClassVar, Mapping, Sequence

from rankaudit.model import (
    PackageSnapshot,
    Release,
    RepoSnapshot,
    format_timestamp,
    normalize_name,
    repo_from_record,
)
from rankaudit.scoring import score
from rankaudit.semver import SIX_MONTHS, SemverError, Version, compare, parse_semver

#: Back-dating offset for AgePackage; one day past the six-month boundary.
AGE_OFFSET = SIX_MONTHS + timedelta(days=1)

Pair = tuple[PackageSnapshot, "RepoSnapshot | None"]


# -- release helpers ----------------------------------------------------------


def _max_version(releases: Sequence[Release]) -> Version | None:
    best = None
    for r in releases:
        try:
            v = parse_semver(r.version_text)
        except SemverError:
            continue
        if best is None or compare(v, best) > 0:
            best = v
    return best


def _next_patch(releases: Sequence[Release]) -> str:
    top = _max_version(releases)
    taken = {r.version_text for r in releases}
    if top is None:
        candidate = Version(0, 1, 0)
    else:
        candidate = Version(top.major, top.minor, top.patch + 1)
    while str(candidate) in taken:
        candidate = Version(candidate.major, candidate.minor, candidate.patch + 1)
    return str(candidate)


def _with_release(pkg: PackageSnapshot, version: str, at: datetime) -> PackageSnapshot:
    releases = sorted(pkg.releases + (Release(version, at),), key=lambda r: r.published_at)
    return replace(pkg, releases=tuple(releases), captured_at=max(pkg.captured_at, at))


def _coerce_semver(text: str, taken: set[str]) -> str:
    nums = [int(n) for n in re.findall(r"\d+", text)[:3]]
    nums += [0] * (3 - len(nums))
    v = Version(*nums)
    while str(v) in taken:
        v = Version(v.major, v.minor, v.patch + 1)
    return str(v)


# -- techniques ---------------------------------------------------------------


@dataclass(frozen=True)
class Technique:
    kind: ClassVar[str] = "Technique"

    def mutate(self, pkg, repo, now, index) -> Pair:
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class _CountTechnique(Technique):
    n: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"{self.kind}: count must be non-negative")

    def describe(self) -> str:
        return f"{self.kind}({self.n})"


@dataclass(frozen=True)
class AddBasicInfo(Technique):
    kind: ClassVar[str] = "AddBasicInfo"
    description: str = "Fast, simple and reliable utilities for everyday Python projects"
    keywords: tuple[str, ...] = ("python", "utils", "api")
    homepage_url: str = "https://example.org"

    def mutate(self, pkg, repo, now, index):
        updates = {}
        if not pkg.description:
            updates["description"] = self.description
        if not pkg.keywords:
            updates["keywords"] = self.keywords
        if not pkg.homepage_url and not pkg.repo_url:
            updates["homepage_url"] = self.homepage_url
        return replace(pkg, **updates), repo


@dataclass(frozen=True)
class UrlConfusion(Technique):
    kind: ClassVar[str] = "UrlConfusion"
    victim: RepoSnapshot = None

    def __post_init__(self):
        if self.victim is None:
            raise ValueError("UrlConfusion needs a victim repository")

    def mutate(self, pkg, repo, now, index):
        return replace(pkg, repo_url=self.victim.url), self.victim

    def describe(self) -> str:
        return f"UrlConfusion({self.victim.slug})"


@dataclass(frozen=True)
class NewRepo(Technique):
    kind: ClassVar[str] = "NewRepo"
    stars: int = 0
    contributors: int = 1
    readme: bool = True
    owner: str = "attacker"

    def __post_init__(self):
        if self.stars < 0 or self.contributors < 0:
            raise ValueError("NewRepo: counts must be non-negative")

    def mutate(self, pkg, repo, now, index):
        new = RepoSnapshot(
            url=f"https://github.com/{self.owner}/{pkg.normalized_name}",
            captured_at=now,
            stars=self.stars,
            contributors_count=self.contributors,
            has_readme=self.readme,
            manifest_package_names=(pkg.normalized_name,),
        )
        return replace(pkg, repo_url=new.url), new

    def describe(self) -> str:
        return f"NewRepo(stars={self.stars}, contributors={self.contributors})"


@dataclass(frozen=True)
class AddReadme(Technique):
    kind: ClassVar[str] = "AddReadme"

    def mutate(self, pkg, repo, now, index):
        if repo is None or repo.has_readme:
            return pkg, repo
        return pkg, replace(repo, has_readme=True)


@dataclass(frozen=True)
class MultipleVersions(Technique):
    kind: ClassVar[str] = "MultipleVersions"

    def mutate(self, pkg, repo, now, index):
        while len(pkg.releases) < 2:
            pkg = _with_release(pkg, _next_patch(pkg.releases), now)
        return pkg, repo


@dataclass(frozen=True)
class FollowSemVer(Technique):
    kind: ClassVar[str] = "FollowSemVer"

    def mutate(self, pkg, repo, now, index):
        taken = {r.version_text for r in pkg.releases}
        releases = []
        for r in pkg.releases:
            try:
                parse_semver(r.version_text)
                releases.append(r)
            except SemverError:
                text = _coerce_semver(r.version_text, taken)
                taken.add(text)
                releases.append(Release(text, r.published_at))
        return replace(pkg, releases=tuple(releases)), repo


@dataclass(frozen=True)
class RecentRelease(Technique):
    kind: ClassVar[str] = "RecentRelease"

    def mutate(self, pkg, repo, now, index):
        if pkg.releases and now - pkg.releases[-1].published_at <= SIX_MONTHS:
            return pkg, repo
        return _with_release(pkg, _next_patch(pkg.releases), now), repo


@dataclass(frozen=True)
class AgePackage(Technique):
    kind: ClassVar[str] = "AgePackage"

    def mutate(self, pkg, repo, now, index):
        first_at = now - AGE_OFFSET
        if not pkg.releases:
            return _with_release(pkg, "0.1.0", first_at), repo
        first = pkg.releases[0]
        if first.published_at <= first_at:
            return pkg, repo
        releases = (Release(first.version_text, first_at),) + pkg.releases[1:]
        return replace(pkg, releases=releases), repo


@dataclass(frozen=True)
class VersionGE1(Technique):
    kind: ClassVar[str] = "VersionGE1"

    def mutate(self, pkg, repo, now, index):
        top = _max_version(pkg.releases)
        for r in pkg.releases:
            try:
                v = parse_semver(r.version_text)
            except SemverError:
                continue
            if v.major >= 1 and not v.prerelease:
                return pkg, repo
        target = Version(1, 0, 0) if top is None or top.major < 1 else Version(top.major + 1, 0, 0)
        return _with_release(pkg, str(target), now), repo


@dataclass(frozen=True)
class CreateDependents(_CountTechnique):
    kind: ClassVar[str] = "CreateDependents"

    def mutate(self, pkg, repo, now, index):
        return replace(pkg, dependents_count=max(pkg.dependents_count, self.n)), repo


@dataclass(frozen=True)
class CreateDependentRepos(_CountTechnique):
    kind: ClassVar[str] = "CreateDependentRepos"

    def mutate(self, pkg, repo, now, index):
        return replace(pkg, dependent_repos_count=max(pkg.dependent_repos_count, self.n)), repo


@dataclass(frozen=True)
class FakeStars(_CountTechnique):
    kind: ClassVar[str] = "FakeStars"

    def mutate(self, pkg, repo, now, index):
        if repo is None:
            return pkg, repo
        return pkg, replace(repo, stars=max(repo.stars, self.n))


@dataclass(frozen=True)
class FakeContributors(_CountTechnique):
    kind: ClassVar[str] = "FakeContributors"

    def mutate(self, pkg, repo, now, index):
        if repo is None:
            return pkg, repo
        return pkg, replace(repo, contributors_count=max(repo.contributors_count, self.n))


@dataclass(frozen=True)
class FakeSubscribers(_CountTechnique):
    kind: ClassVar[str] = "FakeSubscribers"

    def mutate(self, pkg, repo, now, index):
        return replace(pkg, subscribers_count=max(pkg.subscribers_count, self.n)), repo


@dataclass(frozen=True)
class AvoidPreReleases(Technique):
    """Publish the stable counterpart of the newest prerelease alongside it."""

    kind: ClassVar[str] = "AvoidPreReleases"

    def mutate(self, pkg, repo, now, index):
        if not pkg.releases or not all(r.is_prerelease for r in pkg.releases):
            return pkg, repo
        top = _max_version(pkg.releases)
        stable = str(Version(*top.core))
        return _with_release(pkg, stable, pkg.releases[-1].published_at), repo


@dataclass(frozen=True)
class UpdateDependencies(Technique):
    kind: ClassVar[str] = "UpdateDependencies"
    latest: Mapping[str, str] | None = field(default=None, hash=False, compare=False)

    def mutate(self, pkg, repo, now, index):
        view = self.latest if self.latest is not None else index
        if not view:
            return pkg, repo
        by_name = {normalize_name(k): v for k, v in view.items()}
        deps = tuple(
            (name, f"=={by_name[normalize_name(name)]}")
            if normalize_name(name) in by_name
            else (name, constraint)
            for name, constraint in pkg.dependencies
        )
        return replace(pkg, dependencies=deps), repo


@dataclass(frozen=True)
class AvoidRemoval(Technique):
    kind: ClassVar[str] = "AvoidRemoval"

    def mutate(self, pkg, repo, now, index):
        return replace(pkg, status="active"), repo


TECHNIQUES: dict[str, type[Technique]] = {
    cls.kind: cls
    for cls in (
        AddBasicInfo,
        UrlConfusion,
        NewRepo,
        AddReadme,
        MultipleVersions,
        FollowSemVer,
        RecentRelease,
        AgePackage,
        VersionGE1,
        CreateDependents,
        CreateDependentRepos,
        FakeStars,
        FakeContributors,
        FakeSubscribers,
        AvoidPreReleases,
        UpdateDependencies,
        AvoidRemoval,
    )
}


def technique_from_record(rec: Mapping, now: datetime | None = None) -> Technique:
    """Build a technique from a plan record such as ``{"kind": "FakeStars", "n": 100}``."""
    rec = dict(rec)
    kind = rec.pop("kind")
    try:
        cls = TECHNIQUES[kind]
    except KeyError:
        raise ValueError(f"unknown technique {kind!r}") from None
    if cls is UrlConfusion:
        victim = dict(rec.pop("victim"))
        if "captured_at" not in victim:
            if now is None:
                raise ValueError("victim repository needs captured_at")
            victim["captured_at"] = format_timestamp(now)
        return UrlConfusion(victim=repo_from_record(victim))
    if "keywords" in rec:
        rec["keywords"] = tuple(rec["keywords"])
    return cls(**rec)


def full_technique_set(victim: RepoSnapshot, budget: int = 100) -> list[Technique]:
    """Every technique once, ordered so that repo-level fakes follow the repo claim."""
    return [
        AvoidRemoval(),
        AddBasicInfo(),
        UrlConfusion(victim=victim),
        AddReadme(),
        FollowSemVer(),
        AvoidPreReleases(),
        MultipleVersions(),
        VersionGE1(),
        RecentRelease(),
        AgePackage(),
        UpdateDependencies(),
        CreateDependents(budget),
        CreateDependentRepos(budget // 10),
        FakeStars(budget * 10),
        FakeContributors(budget // 2),
        FakeSubscribers(budget // 10),
    ]


# -- application ----------------------------------------------------------------


@dataclass(frozen=True)
class EvasionStep:
    technique: Technique
    score_before: int
    score_after: int
    delta: int
    applied: bool

    def as_record(self) -> dict:
        return {
            "technique": self.technique.describe(),
            "before": self.score_before,
            "after": self.score_after,
            "delta": self.delta,
            "applied": self.applied,
        }


@dataclass(frozen=True)
class EvasionReport:
    steps: tuple[EvasionStep, ...]
    initial_score: int
    final_score: int
    package: PackageSnapshot = field(compare=False, repr=False, default=None)
    repo: RepoSnapshot | None = field(compare=False, repr=False, default=None)


def apply_technique(
    pkg: PackageSnapshot,
    repo: RepoSnapshot | None,
    technique: Technique,
    now: datetime,
    index: Mapping[str, str] | None = None,
) -> tuple[PackageSnapshot, RepoSnapshot | None, EvasionStep]:
    before = score(pkg, repo, now, index)
    new_pkg, new_repo = technique.mutate(pkg, repo, now, index)
    after = score(new_pkg, new_repo, now, index)
    changed = new_pkg != pkg or new_repo != repo
    if after < before or not changed:
        return pkg, repo, EvasionStep(technique, before, before, 0, False)
    return new_pkg, new_repo, EvasionStep(technique, before, after, after - before, True)


def plan_max_inflation(
    pkg: PackageSnapshot,
    repo: RepoSnapshot | None,
    techniques: Sequence[Technique],
    now: datetime,
    index: Mapping[str, str] | None = None,
) -> EvasionReport:
    """Apply ``techniques`` greedily in order, skipping any that would lower the score."""
    initial = score(pkg, repo, now, index)
    steps = []
    for technique in techniques:
        pkg, repo, step = apply_technique(pkg, repo, technique, now, index)
        steps.append(step)
    final = steps[-1].score_after if steps else initial
    return EvasionReport(tuple(steps), initial, final, pkg, repo)

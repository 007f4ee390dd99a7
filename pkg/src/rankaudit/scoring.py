"""SourceRank recomputation: the 18 metric contributions and their sum."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from datetime import datetime
from fractions import Fraction
from typing import Mapping

from packaging.specifiers import InvalidSpecifier, Specifier
from packaging.version import InvalidVersion
from packaging.version import Version as PyVersion

from rankaudit.model import PackageSnapshot, RepoSnapshot, normalize_name
from rankaudit.semver import release_flags

METRIC_NAMES: tuple[str, ...] = (
    "basic_info_present",
    "source_repository_present",
    "readme_present",
    "has_multiple_versions",
    "follows_semver",
    "recent_release",
    "not_brand_new",
    "ge_1_0_0",
    "dependent_packages",
    "dependent_repositories",
    "stars",
    "contributors",
    "subscribers",
    "all_prereleases",
    "any_outdated_dependencies",
    "is_deprecated",
    "is_unmaintained",
    "is_removed",
)

STATUS_PENALTY = -5
HIDDEN_PENALTY = -1


@dataclass(frozen=True)
class ScalingRule:
    multiplier: Fraction
    rounding: str = "half-away-from-zero"

    def __post_init__(self):
        if self.multiplier not in (Fraction(2), Fraction(1), Fraction(1, 2)):
            raise ValueError(f"unsupported multiplier {self.multiplier}")


DOUBLE = ScalingRule(Fraction(2))
SINGLE = ScalingRule(Fraction(1))
HALF = ScalingRule(Fraction(1, 2))


def log_bucket(count: int, rule: ScalingRule) -> int:
    """round(log10(count) * multiplier), halves away from zero; 0 for count <= 0."""
    if count <= 0:
        return 0
    value = math.log10(count) * float(rule.multiplier)
    # value >= 0 here, so half-away-from-zero is floor(x + 0.5)
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class MetricBreakdown:
    basic_info_present: int = 0
    source_repository_present: int = 0
    readme_present: int = 0
    has_multiple_versions: int = 0
    follows_semver: int = 0
    recent_release: int = 0
    not_brand_new: int = 0
    ge_1_0_0: int = 0
    dependent_packages: int = 0
    dependent_repositories: int = 0
    stars: int = 0
    contributors: int = 0
    subscribers: int = 0
    all_prereleases: int = 0
    any_outdated_dependencies: int = 0
    is_deprecated: int = 0
    is_unmaintained: int = 0
    is_removed: int = 0

    @property
    def total(self) -> int:
        return total(self)

    def as_record(self) -> dict[str, int]:
        rec = asdict(self)
        rec["total"] = self.total
        return rec


def total(breakdown: MetricBreakdown) -> int:
    return sum(getattr(breakdown, name) for name in METRIC_NAMES)


def _upper_bound_excludes(spec: Specifier, latest: PyVersion) -> bool:
    op, ver = spec.operator, spec.version
    if op in ("==", "===") and not ver.endswith(".*"):
        if op == "===":
            return ver != str(latest)
        return PyVersion(ver) != latest
    if op in ("==", "<", "<=", "~="):
        return not spec.contains(latest, prereleases=True)
    return False


def is_outdated(constraint: str, latest: str) -> bool:
    """True if an exact pin or upper bound in ``constraint`` excludes ``latest``.

    Lower bounds, exclusions and anything unparseable never count as outdated.
    """
    try:
        latest_v = PyVersion(latest)
    except InvalidVersion:
        return False
    for clause in (c.strip() for c in constraint.split(",")):
        if not clause:
            continue
        try:
            spec = Specifier(clause)
        except InvalidSpecifier:
            continue
        try:
            if _upper_bound_excludes(spec, latest_v):
                return True
        except InvalidVersion:
            continue
    return False


def any_outdated(pkg: PackageSnapshot, index: Mapping[str, str] | None) -> bool:
    if not index:
        return False
    latest_by_name = {normalize_name(k): v for k, v in index.items()}
    for dep_name, constraint in pkg.dependencies:
        latest = latest_by_name.get(normalize_name(dep_name))
        if latest is not None and is_outdated(constraint, latest):
            return True
    return False


def score_breakdown(
    pkg: PackageSnapshot,
    repo: RepoSnapshot | None,
    now: datetime,
    index: Mapping[str, str] | None = None,
) -> MetricBreakdown:
    """Compute every metric for ``pkg`` as seen at ``now``.

    ``index`` maps dependency names to their latest known version; without it
    the outdated-dependency penalty is never applied.
    """
    flags = release_flags(pkg.releases, now)
    has_url = bool(pkg.homepage_url) or bool(pkg.repo_url)
    return MetricBreakdown(
        basic_info_present=int(bool(pkg.description) and has_url and bool(pkg.keywords)),
        source_repository_present=int(bool(pkg.repo_url)),
        readme_present=int(repo is not None and repo.has_readme),
        has_multiple_versions=int(flags.has_multiple_versions),
        follows_semver=int(flags.follows_semver),
        recent_release=int(flags.recent_release),
        not_brand_new=int(flags.not_brand_new),
        ge_1_0_0=int(flags.ge_1_0_0),
        dependent_packages=log_bucket(pkg.dependents_count, DOUBLE),
        dependent_repositories=log_bucket(pkg.dependent_repos_count, SINGLE),
        stars=log_bucket(repo.stars, SINGLE) if repo is not None else 0,
        contributors=log_bucket(repo.contributors_count, HALF) if repo is not None else 0,
        subscribers=log_bucket(pkg.subscribers_count, HALF),
        all_prereleases=HIDDEN_PENALTY if flags.all_prereleases else 0,
        any_outdated_dependencies=HIDDEN_PENALTY if any_outdated(pkg, index) else 0,
        is_deprecated=STATUS_PENALTY if pkg.status == "deprecated" else 0,
        is_unmaintained=STATUS_PENALTY if pkg.status == "unmaintained" else 0,
        is_removed=STATUS_PENALTY if pkg.status == "removed" else 0,
    )


def score(
    pkg: PackageSnapshot,
    repo: RepoSnapshot | None,
    now: datetime,
    index: Mapping[str, str] | None = None,
) -> int:
    return score_breakdown(pkg, repo, now, index).total

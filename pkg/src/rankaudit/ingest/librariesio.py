"""Libraries.io project documents: reported rank, metric values and hidden flags.

The reported values are for parity checks only; scoring never reads them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping

from rankaudit.errors import CredentialError, NotFoundError, ParseError
from rankaudit.ingest.transport import FetchPolicy, Fetcher
from rankaudit.model import PackageSnapshot, normalize_name
from rankaudit.scoring import METRIC_NAMES, MetricBreakdown

API_ROOT = "https://libraries.io/api/pypi/{name}"

# Provider field name -> our metric name. Fields not listed are ignored.
WIRE_TO_METRIC: dict[str, str] = {
    "basic_info_present": "basic_info_present",
    "repository_present": "source_repository_present",
    "readme_present": "readme_present",
    "versions_present": "has_multiple_versions",
    "follows_semver": "follows_semver",
    "recent_release": "recent_release",
    "not_brand_new": "not_brand_new",
    "one_point_oh": "ge_1_0_0",
    "dependent_projects": "dependent_packages",
    "dependent_repositories": "dependent_repositories",
    "stars": "stars",
    "contributors": "contributors",
    "subscribers": "subscribers",
    "all_prereleases": "all_prereleases",
    "any_outdated_dependencies": "any_outdated_dependencies",
    "is_deprecated": "is_deprecated",
    "is_unmaintained": "is_unmaintained",
    "is_removed": "is_removed",
}
HIDDEN = (
    "all_prereleases",
    "any_outdated_dependencies",
    "is_deprecated",
    "is_removed",
    "is_unmaintained",
)

_STATUS = {"deprecated": "deprecated", "unmaintained": "unmaintained", "removed": "removed"}


@dataclass(frozen=True)
class ReferenceProjectRecord:
    name: str
    reported_rank: int
    visible: Mapping[str, int] = field(default_factory=dict)
    all_prereleases: bool = False
    any_outdated_dependencies: bool = False
    is_deprecated: bool = False
    is_removed: bool = False
    is_unmaintained: bool = False


def parse_reference(project_doc: bytes, sourcerank_doc: bytes | None) -> ReferenceProjectRecord:
    try:
        project = json.loads(project_doc)
        breakdown = json.loads(sourcerank_doc) if sourcerank_doc else {}
        name = project["name"]
        rank = int(project["rank"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed reference record: {exc}") from exc
    values: dict[str, int] = {}
    for wire, value in breakdown.items():
        metric = WIRE_TO_METRIC.get(wire)
        if metric is None or isinstance(value, bool) or not isinstance(value, (int, float)):
            continue
        values[metric] = int(value)
    hidden = {flag: bool(breakdown.get(flag)) for flag in HIDDEN}
    status = str(project.get("status") or "").lower()
    if status in _STATUS:
        hidden[f"is_{status}"] = True
    return ReferenceProjectRecord(name=name, reported_rank=rank, visible=values, **hidden)


def fetch_reference_record(
    name: str, policy: FetchPolicy, fetcher: Fetcher | None = None
) -> ReferenceProjectRecord:
    fetcher = fetcher or Fetcher(policy)
    key = normalize_name(name)
    api_key = policy.credential(policy.api_key_env)
    if api_key is None and not policy.offline:
        cached = fetcher.read_cache("librariesio", f"{key}.json")
        if cached is None:
            raise CredentialError(f"set {policy.api_key_env} to query the provider API")
    suffix = f"?api_key={api_key}" if api_key else ""
    root = API_ROOT.format(name=key)
    project = fetcher.get("librariesio", f"{key}.json", root + suffix)
    try:
        sourcerank = fetcher.get("librariesio", f"{key}.sourcerank.json", f"{root}/sourcerank{suffix}")
    except NotFoundError:
        if not policy.offline:
            raise
        sourcerank = None
    return parse_reference(project, sourcerank)


def enrich_snapshot(pkg: PackageSnapshot, project_doc: bytes) -> PackageSnapshot:
    """Copy registry-side counts and status from a provider project document."""
    try:
        project = json.loads(project_doc)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed project document: {exc}") from exc
    status = _STATUS.get(str(project.get("status") or "").lower(), "active")
    return replace(
        pkg,
        dependents_count=int(project.get("dependents_count") or 0),
        dependent_repos_count=int(project.get("dependent_repos_count") or 0),
        subscribers_count=int(project.get("subscribers_count") or 0),
        status=status,
    )


@dataclass(frozen=True)
class ParityReport:
    name: str
    reported: int
    computed: int
    mismatches: tuple[tuple[str, int, int], ...]

    @property
    def status(self) -> str:
        return "match" if self.reported == self.computed else "mismatch"

    def as_record(self) -> dict:
        return {
            "name": self.name,
            "reported_rank": self.reported,
            "computed_total": self.computed,
            "status": self.status,
            "metric_mismatches": [
                {"metric": m, "reported": r, "computed": c} for m, r, c in self.mismatches
            ],
        }


def parity_report(record: ReferenceProjectRecord, breakdown: MetricBreakdown) -> ParityReport:
    """Compare provider-reported values against a recomputed breakdown, metric by metric."""
    mismatches = []
    for metric in METRIC_NAMES:
        if metric in record.visible:
            ours = getattr(breakdown, metric)
            if record.visible[metric] != ours:
                mismatches.append((metric, record.visible[metric], ours))
    return ParityReport(record.name, record.reported_rank, breakdown.total, tuple(mismatches))

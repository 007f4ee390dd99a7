"""Regenerate the fixture tree under tests/fixtures from the authored tables below.

The cache subtree mirrors the on-disk cache layout ({cache}/{source}/{key}), so
the CLI can run the whole pipeline against it with --offline.

    python3 scripts/build_fixtures.py [--root tests/fixtures]
"""

from __future__ import annotations

import argparse
import json
import shutil
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from email.utils import format_datetime
from pathlib import Path

from rankaudit.model import (
    CorpusEntry,
    Label,
    LabeledCorpus,
    PackageSnapshot,
    Release,
    RepoSnapshot,
    format_timestamp,
    normalize_name,
    save_corpus,
    save_snapshots,
    split_repo_url,
)

NOW = datetime(2024, 12, 1, tzinfo=timezone.utc)


def ago(days: float) -> datetime:
    return NOW - timedelta(days=days)


@dataclass
class Repo:
    url: str
    stars: int
    contributors: int
    readme: bool = True
    manifest: tuple[str, ...] = ()
    tags: tuple[tuple[str, float], ...] = ()  # (tag, days ago)


@dataclass
class Pkg:
    name: str
    label: str
    releases: tuple[tuple[str, float], ...]
    description: str | None = None
    homepage: str | None = None
    repo_url: str | None = None
    keywords: tuple[str, ...] = ()
    dependents: int = 0
    dependent_repos: int = 0
    subscribers: int = 0
    status: str = "active"
    advisory: str | None = None


REPOS = {
    "https://github.com/pypa/sampleproject": Repo(
        "https://github.com/pypa/sampleproject", 5214, 57, manifest=("sampleproject",)
    ),
    "https://github.com/CorwinDev/Discord-Bot": Repo(
        "https://github.com/CorwinDev/Discord-Bot", 412, 14
    ),
    "https://github.com/encode/httpx": Repo(
        "https://github.com/encode/httpx", 14120, 212, manifest=("httpx",)
    ),
    "https://github.com/fake-useragent/fake-useragent": Repo(
        "https://github.com/fake-useragent/fake-useragent", 3810, 41, manifest=("fake-useragent",)
    ),
    "https://github.com/psf/requests": Repo(
        "https://github.com/psf/requests", 52340, 662, manifest=("requests",)
    ),
    "https://github.com/cuongitl/python-bitget": Repo(
        "https://github.com/cuongitl/python-bitget", 118, 6, manifest=("python-bitget",)
    ),
    "https://github.com/pandas-dev/pandas": Repo(
        "https://github.com/pandas-dev/pandas", 43800, 3320, manifest=("pandas",)
    ),
    "https://github.com/numpy/numpy": Repo("https://github.com/numpy/numpy", 28000, 1600),
    "https://github.com/pallets/flask": Repo("https://github.com/pallets/flask", 68000, 720),
    "https://github.com/django/django": Repo("https://github.com/django/django", 80000, 2500),
    "https://github.com/pytest-dev/pytest": Repo(
        "https://github.com/pytest-dev/pytest", 12000, 900
    ),
    "https://github.com/pallets/click": Repo("https://github.com/pallets/click", 15700, 380),
    "https://github.com/Textualize/rich": Repo(
        "https://github.com/Textualize/rich", 50000, 260
    ),
    "https://github.com/python-attrs/attrs": Repo(
        "https://github.com/python-attrs/attrs", 5300, 150
    ),
    "https://github.com/dateutil/dateutil": Repo(
        "https://github.com/dateutil/dateutil", 2400, 190
    ),
    "https://github.com/pytest-dev/pytest-cov": Repo(
        "https://github.com/pytest-dev/pytest-cov", 1800, 120, manifest=("pytest-cov",)
    ),
    "https://github.com/newtools/toolkit": Repo(
        "https://github.com/newtools/toolkit", 3, 1, readme=False, manifest=("some-new-tool",)
    ),
    "https://github.com/yaml/pyyaml": Repo("https://github.com/yaml/pyyaml", 2600, 60),
    "https://github.com/requests/requests-oauthlib": Repo(
        "https://github.com/requests/requests-oauthlib", 1700, 140
    ),
    "https://github.com/acme/client-lib": Repo(
        "https://github.com/acme/client-lib",
        25,
        3,
        tags=(("v0.1.0", 300.2), ("v0.2.0", 200.1), ("v0.3.0", 20.5)),
    ),
    "https://github.com/grabber-dev/token-grabber-x": Repo(
        "https://github.com/grabber-dev/token-grabber-x", 0, 1, readme=False
    ),
}

# Legitimate owners of the repositories above; the two malware-only repositories
# and the unregistered benign ones are deliberately absent.
REGISTRY = [
    ("https://github.com/pypa/sampleproject", "sampleproject"),
    ("https://github.com/CorwinDev/Discord-Bot", "discord-bot"),
    ("https://github.com/encode/httpx", "httpx"),
    ("https://github.com/fake-useragent/fake-useragent", "fake-useragent"),
    ("https://github.com/psf/requests", "requests"),
    ("https://github.com/cuongitl/python-bitget", "python-bitget"),
    ("https://github.com/pandas-dev/pandas", "pandas"),
    ("https://github.com/numpy/numpy", "numpy"),
    ("https://github.com/pallets/flask", "flask"),
    ("https://github.com/django/django", "django"),
    ("https://github.com/pytest-dev/pytest", "pytest"),
    ("https://github.com/pallets/click", "click"),
    ("https://github.com/Textualize/rich", "rich"),
    ("https://github.com/python-attrs/attrs", "attrs"),
    ("https://github.com/dateutil/dateutil", "python-dateutil"),
]

STABLE = (("1.0.0", 900), ("1.1.0", 400), ("1.2.0", 30))


def benign(name, repo_url, **kw) -> Pkg:
    kw.setdefault("releases", STABLE)
    kw.setdefault("description", f"{name} library")
    kw.setdefault("keywords", ("python",))
    return Pkg(name, "benign", repo_url=repo_url, **kw)


def malicious(name, repo_url, releases, advisory, **kw) -> Pkg:
    kw.setdefault("description", "Utility package")
    return Pkg(name, "malicious", releases, repo_url=repo_url, advisory=advisory, **kw)


PACKAGES = [
    # the named URL-confusion cases
    malicious("foo-helper", "https://github.com/pypa/sampleproject", (("0.1.0", 40),), "MAL-2024-0001"),
    malicious("quick-setup-demo", "https://github.com/pypa/sampleproject", (("1.0.2", 35),), "MAL-2024-0002",
              keywords=("sample",)),
    malicious("pkg-starter-kit", "https://github.com/pypa/sampleproject/", (("2.0.0", 12),), "MAL-2024-0003"),
    malicious("discordbotpresence", "https://github.com/CorwinDev/Discord-Bot", (("0.6.7", 60),), "MAL-2024-0004",
              keywords=("discord", "bot")),
    malicious("discordbotstatus", "https://github.com/encode/httpx", (("0.6.7", 58),), "MAL-2024-0005"),
    malicious("fake-usreagent", "https://github.com/fake-useragent/fake-useragent", (("1.4.0", 20),),
              "MAL-2024-0006", keywords=("user-agent",), homepage="https://pypi.org/project/fake-usreagent/"),
    malicious("frexco-pip-requests", "https://github.com/psf/requests.git", (("0.0.1", 90), ("0.0.2", 89)),
              "MAL-2024-0007"),
    malicious("python-bitget-api", "https://github.com/cuongitl/python-bitget", (("3.3.5", 15),), "MAL-2024-0008"),
    malicious("python-bitget-connect", "https://github.com/cuongitl/python-bitget", (("0.3.9", 15),), "MAL-2024-0009"),
    malicious("python-bitget-request", "https://github.com/cuongitl/python-bitget", (("4.9.5", 14),), "MAL-2024-0010"),
    malicious("python-bitget-wrapper", "https://github.com/cuongitl/python-bitget", (("0.3.7", 14),), "MAL-2024-0011"),
    # malicious packages that do not use URL confusion
    malicious("evil-stealer", None, (("0.0.1", 3),), "MAL-2024-0012", description=None),
    malicious("token-grabber-x", "https://github.com/grabber-dev/token-grabber-x", (("1.0", 7),), "MAL-2024-0013"),
    malicious("crypt0-miner", None, (("0.1.0-beta", 250),), "MAL-2024-0014", status="removed"),
    # benign packages with registry-owned repositories
    benign("pandas", "https://github.com/pandas-dev/pandas", dependents=20000, dependent_repos=90000, subscribers=600),
    benign("numpy", "https://github.com/numpy/numpy", dependents=50000, dependent_repos=200000, subscribers=800),
    benign("requests", "https://github.com/psf/requests",
           releases=(("2.31.0", 540), ("2.32.0", 200), ("2.32.3", 170)),
           homepage="https://requests.readthedocs.io", dependents=5000, dependent_repos=10000, subscribers=100),
    benign("httpx", "https://github.com/encode/httpx", dependents=3000, dependent_repos=20000, subscribers=40),
    benign("fake-useragent", "https://github.com/fake-useragent/fake-useragent", dependents=300, dependent_repos=4000),
    benign("flask", "https://github.com/pallets/flask", dependents=9000, dependent_repos=120000, subscribers=300),
    benign("Django", "https://github.com/django/django", dependents=12000, dependent_repos=150000, subscribers=400),
    benign("pytest", "https://github.com/pytest-dev/pytest", dependents=20000, dependent_repos=300000),
    benign("click", "https://github.com/pallets/click", dependents=15000, dependent_repos=100000),
    benign("rich", "https://github.com/Textualize/rich", dependents=6000, dependent_repos=50000),
    benign("attrs", "https://github.com/python-attrs/attrs", dependents=4000, dependent_repos=60000),
    benign("python-dateutil", "https://github.com/dateutil/dateutil", dependents=7000, dependent_repos=80000),
    benign("sampleproject", "https://github.com/pypa/sampleproject", releases=(("3.0.0", 600), ("4.0.0", 300))),
    benign("python-bitget", "https://github.com/cuongitl/python-bitget", releases=(("1.0.8", 100),)),
    # benign packages whose repositories are not in the registry
    benign("pytest-cov", "https://github.com/pytest-dev/pytest-cov", dependents=2000),
    benign("some-new-tool", "https://github.com/newtools/toolkit", releases=(("0.1.0", 2),), keywords=()),
    benign("tinyutil", None, releases=(("0.3.1", 500),), description=None, keywords=()),
    benign("PyYAML", "https://github.com/yaml/pyyaml", releases=(("6.0", 700), ("6.0.1", 480), ("6.0.2", 110))),
    benign("requests-oauthlib", "https://github.com/requests/requests-oauthlib", dependents=1000),
    benign("acme-client", "https://github.com/acme/client-lib",
           releases=(("0.1.0", 300), ("0.2.0", 200), ("0.3.0", 20))),
]


# -- builders ------------------------------------------------------------------


def snapshot(p: Pkg) -> PackageSnapshot:
    return PackageSnapshot(
        name=p.name,
        captured_at=NOW,
        description=p.description,
        homepage_url=p.homepage,
        repo_url=p.repo_url,
        keywords=p.keywords,
        releases=tuple(sorted((Release(v, ago(d)) for v, d in p.releases), key=lambda r: (r.published_at, r.version_text))),
        dependents_count=p.dependents,
        dependent_repos_count=p.dependent_repos,
        subscribers_count=p.subscribers,
        status=p.status,
    )


def repo_snapshot(url: str) -> RepoSnapshot:
    r = REPOS[url.rstrip("/").removesuffix(".git")]
    return RepoSnapshot(
        url=r.url,
        captured_at=NOW,
        stars=r.stars,
        contributors_count=r.contributors,
        has_readme=r.readme,
        tags=tuple((t, ago(d)) for t, d in r.tags),
        manifest_package_names=r.manifest,
    )


def label(p: Pkg) -> Label:
    if p.label == "malicious":
        return Label(normalize_name(p.name), "malicious", "osv", p.advisory)
    return Label(normalize_name(p.name), "benign", "manual")


def pypi_document(p: Pkg) -> dict:
    project_urls = {"Source": p.repo_url} if p.repo_url else {}
    return {
        "info": {
            "name": p.name,
            "summary": p.description or "",
            "home_page": p.homepage or "",
            "project_urls": project_urls or None,
            "keywords": ",".join(p.keywords),
            "requires_dist": None,
        },
        "releases": {
            v: [{"upload_time_iso_8601": ago(d).strftime("%Y-%m-%dT%H:%M:%S.000000Z")}]
            for v, d in p.releases
        },
    }


def forge_document(r: Repo) -> dict:
    return {
        "url": r.url,
        "stars": r.stars,
        "contributors_count": r.contributors,
        "has_readme": r.readme,
        "tags": [[t, format_timestamp(ago(d))] for t, d in r.tags],
        "manifest_package_names": list(r.manifest),
        "captured_at": format_timestamp(NOW),
    }


def project_document(p: Pkg) -> dict:
    return {
        "name": normalize_name(p.name),
        "platform": "Pypi",
        "rank": 0,
        "status": None if p.status == "active" else p.status.capitalize(),
        "dependents_count": p.dependents,
        "dependent_repos_count": p.dependent_repos,
        "subscribers_count": p.subscribers,
    }


def osv_document(p: Pkg) -> dict:
    return {
        "schema_version": "1.5.0",
        "id": p.advisory,
        "modified": format_timestamp(NOW),
        "summary": f"Malicious code in {normalize_name(p.name)} (PyPI)",
        "affected": [
            {
                "package": {"ecosystem": "PyPI", "name": p.name},
                "versions": [v for v, _ in p.releases],
            }
        ],
    }


def rss(items: list[tuple[str, str, str, datetime]]) -> str:
    body = "".join(
        f"<item><title>{title}</title><link>{link}</link>"
        f"<description>{desc}</description><pubDate>{format_datetime(at, usegmt=True)}</pubDate></item>\n"
        for title, link, desc, at in items
    )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<rss version="2.0"><channel>\n'
        "<title>PyPI recent updates</title><link>https://pypi.org/</link>"
        "<description>Recent updates to the Python Package Index</description>\n"
        f"{body}</channel></rss>\n"
    )


def write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def build_cache(root: Path) -> None:
    cache = root / "cache"
    new_packages, new_releases = [], []
    for p in PACKAGES:
        first_v, first_d = min(p.releases, key=lambda vd: -vd[1])
        last_v, last_d = min(p.releases, key=lambda vd: vd[1])
        new_packages.append(
            (f"{p.name} added to PyPI", f"https://pypi.org/project/{p.name}/", p.description or "", ago(first_d))
        )
        for v, d in p.releases:
            new_releases.append(
                (f"{p.name} {v}", f"https://pypi.org/project/{p.name}/{v}/", p.description or "", ago(d))
            )
        key = normalize_name(p.name)
        write_json(cache / "pypi" / f"{key}.json", pypi_document(p))
        write_json(cache / "librariesio" / f"{key}.json", project_document(p))
    new_packages.sort(key=lambda it: it[3], reverse=True)
    new_releases.sort(key=lambda it: it[3], reverse=True)
    # the packages feed repeats its newest item, as feeds do across polling windows
    new_packages.insert(1, new_packages[0])
    (cache / "feeds").mkdir(parents=True, exist_ok=True)
    (cache / "feeds" / "new_packages.xml").write_text(rss(new_packages), encoding="utf-8")
    (cache / "feeds" / "new_releases.xml").write_text(rss(new_releases), encoding="utf-8")
    for r in REPOS.values():
        host, owner, name = split_repo_url(r.url)
        write_json(cache / "forge" / host / owner / f"{name}.json", forge_document(r))

    # reference records for the parity check
    requests_pkg = next(p for p in PACKAGES if p.name == "requests")
    doc = project_document(requests_pkg)
    doc["rank"] = 26
    write_json(cache / "librariesio" / "requests.json", doc)
    write_json(
        cache / "librariesio" / "requests.sourcerank.json",
        {
            "basic_info_present": 1, "repository_present": 1, "readme_present": 1,
            "versions_present": 1, "follows_semver": 1, "recent_release": 1,
            "not_brand_new": 1, "one_point_oh": 1, "dependent_projects": 7,
            "dependent_repositories": 4, "stars": 5, "contributors": 1, "subscribers": 1,
            "all_prereleases": 0, "any_outdated_dependencies": 0,
            "is_deprecated": 0, "is_unmaintained": 0, "is_removed": 0,
        },
    )
    crypt = next(p for p in PACKAGES if p.name == "crypt0-miner")
    doc = project_document(crypt)
    doc["rank"] = -6
    write_json(cache / "librariesio" / "crypt0-miner.json", doc)
    write_json(
        cache / "librariesio" / "crypt0-miner.sourcerank.json",
        {"follows_semver": 1, "not_brand_new": 1, "all_prereleases": -1, "is_removed": -5,
         "is_deprecated": 0, "is_unmaintained": 0},
    )


def build_osv(root: Path) -> None:
    osv = root / "osv"
    for p in PACKAGES:
        if p.advisory:
            write_json(osv / "pypi" / normalize_name(p.name) / f"{p.advisory}.json", osv_document(p))
    write_json(
        osv / "npm" / "left-padder" / "MAL-2024-0900.json",
        {
            "id": "MAL-2024-0900",
            "summary": "Malicious code in left-padder (npm)",
            "affected": [{"package": {"ecosystem": "npm", "name": "left-padder"}}],
        },
    )
    (osv / "README.md").write_text("Advisories in OSV format, one file per advisory.\n", encoding="utf-8")


def build_confusion(root: Path) -> None:
    out = root / "confusion"
    out.mkdir(parents=True, exist_ok=True)
    entries = tuple(
        CorpusEntry(snapshot(p), repo_snapshot(p.repo_url) if p.repo_url else None, label(p)) for p in PACKAGES
    )
    save_corpus(LabeledCorpus(entries, NOW), out / "corpus.lines")
    stars = {r.url: r.stars for r in REPOS.values()}
    with (out / "registry.lines").open("w", encoding="utf-8") as fh:
        for url, owner in REGISTRY:
            fh.write(json.dumps({"package_name": owner, "repo_url": url, "stars": stars[url]}, sort_keys=True) + "\n")


def build_cli(root: Path) -> None:
    """Small corpora for the CLI examples."""
    out = root / "cli"
    out.mkdir(parents=True, exist_ok=True)
    minimal = PackageSnapshot("minimal", NOW, releases=(Release("0.0.1", ago(1)),))
    save_snapshots([(minimal, None)], out / "minimal.lines")

    # benign scores {1, 5, 7}, malicious scores {0, 2, 6}
    def pkg(name, releases, **kw):
        return PackageSnapshot(name, NOW, releases=tuple(Release(v, ago(d)) for v, d in releases), **kw)

    rows = [
        (pkg("bench-one", [("nightly", 5)]), "benign"),
        (pkg("bench-five", [("0.1.0", 5)], dependents_count=10, subscribers_count=10), "benign"),
        (pkg("bench-seven", [("0.1.0", 5)], dependents_count=100, subscribers_count=10), "benign"),
        (pkg("mal-zero", []), "malicious"),
        (pkg("mal-two", [("0.0.1", 1)]), "malicious"),
        (pkg("mal-six", [("0.1.0", 5)], dependents_count=10, dependent_repos_count=10, subscribers_count=10),
         "malicious"),
    ]
    entries = tuple(
        CorpusEntry(p, None, Label(p.normalized_name, verdict, "synthetic")) for p, verdict in rows
    )
    save_corpus(LabeledCorpus(entries, NOW), out / "labeled.lines")


def build_golden(root: Path) -> None:
    """Inputs of the hand-scored corpus; expected values live in golden/expected.json."""
    out = root / "golden"
    out.mkdir(parents=True, exist_ok=True)

    def pkg(name, releases=(), **kw):
        return PackageSnapshot(name, NOW, releases=tuple(Release(v, ago(d)) for v, d in releases), **kw)

    info = dict(description="A package", homepage_url="https://example.org", keywords=("tools",))
    rich_repo = RepoSnapshot("https://github.com/golden/rich", NOW, stars=5000, contributors_count=50, has_readme=True)
    rows = [
        (pkg("minimal", [("0.0.1", 1)]), None),
        (pkg("minimal-removed", [("0.0.1", 1)], status="removed"), None),
        (pkg("rich", [("0.9.0", 400), ("1.0.0", 200), ("1.1.0", 30)], repo_url=rich_repo.url,
             dependents_count=100, dependent_repos_count=10, subscribers_count=3, **info), rich_repo),
        (pkg("deprecated-pkg", [("0.0.1", 1)], status="deprecated"), None),
        (pkg("unmaintained-pkg", [("1.0.0", 400)], status="unmaintained"), None),
        (pkg("prerelease-only", [("1.0.0-rc.1", 201), ("1.0.0-rc.2", 200)]), None),
        (pkg("calver-pkg", [("2024.1", 300), ("2024.2", 10)]), None),
        (pkg("basic-partial", [("0.1.0", 5)], description="A package", keywords=("tools",)), None),
        (pkg("basic-homepage", [("0.1.0", 5)], **info), None),
        (pkg("repo-no-readme", [("0.2.0", 5)], description="A package", keywords=("tools",),
             repo_url="https://github.com/golden/repo-no-readme"),
         RepoSnapshot("https://github.com/golden/repo-no-readme", NOW, stars=9, contributors_count=1)),
        (pkg("repo-url-only", [("0.1.0", 5)], repo_url="https://github.com/golden/repo-url-only"), None),
        (pkg("counts-small", [("0.1.0", 5)], dependents_count=3, dependent_repos_count=3, subscribers_count=10), None),
        (pkg("counts-large", [("0.1.0", 5)], dependents_count=1_000_000, dependent_repos_count=316), None),
        (pkg("stars-boundary", [("0.1.0", 5)], repo_url="https://github.com/golden/stars-boundary"),
         RepoSnapshot("https://github.com/golden/stars-boundary", NOW, stars=32, contributors_count=10, has_readme=True)),
        (pkg("outdated-pin", [("0.1.0", 5)], dependencies=(("requests", "==2.0.0"),)), None),
        (pkg("pinned-current", [("0.1.0", 5)], dependencies=(("requests", "==2.32.3"), ("numpy", ">=1.20"))), None),
        (pkg("upper-bound", [("0.1.0", 400), ("0.2.0", 5)], dependencies=(("numpy", "<2"),)), None),
        (pkg("no-releases"), None),
        (pkg("old-stable", [("0.9.0", 1000), ("1.0.0", 900), ("1.0.1", 800)]), None),
        (pkg("boundary-183", [("1.2.3", 183)]), None),
    ]
    save_snapshots(rows, out / "snapshots.lines")
    write_json(out / "index.json", {"numpy": "2.1.0", "requests": "2.32.3"})


def build_plan(root: Path) -> None:
    victim = REPOS["https://github.com/pypa/sampleproject"]
    plan = [
        {"kind": "AddBasicInfo"},
        {"kind": "UrlConfusion", "victim": forge_document(victim) | {"stars": 5000, "contributors_count": 50}},
        {"kind": "MultipleVersions"},
        {"kind": "VersionGE1"},
        {"kind": "AgePackage"},
        {"kind": "CreateDependents", "n": 100},
        {"kind": "CreateDependentRepos", "n": 10},
        {"kind": "FakeSubscribers", "n": 10},
    ]
    write_json(root / "plan.json", plan)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--root", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    args = ap.parse_args()
    for sub in ("cache", "osv", "confusion", "cli"):
        shutil.rmtree(args.root / sub, ignore_errors=True)
    build_cache(args.root)
    build_osv(args.root)
    build_confusion(args.root)
    build_cli(args.root)
    build_plan(args.root)
    build_golden(args.root)
    print(f"fixtures written under {args.root}")


if __name__ == "__main__":
    main()

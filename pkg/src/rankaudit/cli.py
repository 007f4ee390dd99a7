"""Command-line entry point.

Data goes to ``--out`` files or stdout; diagnostics go to stderr. Exit codes:
0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

from rankaudit import evaluation as ev
from rankaudit.confusion import classify_repo_claim, load_registry
from rankaudit.errors import NotFoundError, RankAuditError
from rankaudit.evasion import plan_max_inflation, technique_from_record
from rankaudit.ingest import feeds, forge, librariesio, osv, pypi
from rankaudit.ingest.transport import FetchPolicy, Fetcher, Transport, fetch_many
from rankaudit.model import (
    format_timestamp,
    label_to_record,
    load_corpus,
    load_labels,
    load_snapshots,
    merge_labels,
    normalize_name,
    parse_timestamp,
    repo_to_record,
    save_corpus,
    save_labels,
    save_snapshots,
    utcnow,
)
from rankaudit.scoring import METRIC_NAMES, score_breakdown

logger = logging.getLogger("rankaudit")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    out: Path | None
    offline: bool
    now: datetime
    policy: FetchPolicy


def _dump(record) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="\n")


def _out_dir(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise RankAuditError(f"{cfg.subcommand} needs --out <directory>")
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _jsonl(records) -> str:
    return "".join(_dump(r) + "\n" for r in records)


def _load_index(path: str | None) -> dict[str, str] | None:
    if not path:
        return None
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- subcommands -----------------------------------------------------------------


def cmd_score(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    snapshots = load_snapshots(args.snapshot)
    index = _load_index(args.index)
    if args.package:
        wanted = normalize_name(args.package)
        for pkg, repo in snapshots:
            if pkg.normalized_name == wanted:
                rec = score_breakdown(pkg, repo, cfg.now, index).as_record()
                _emit(_dump({"name": pkg.normalized_name, **rec}) + "\n", cfg.out)
                return 0
        raise NotFoundError(f"package {args.package!r} not in {args.snapshot}")
    rows = []
    for pkg, repo in snapshots:
        b = score_breakdown(pkg, repo, cfg.now, index)
        rows.append((pkg.normalized_name, *(getattr(b, m) for m in METRIC_NAMES), b.total))
    _emit(ev.to_csv(("name",) + METRIC_NAMES + ("total",), rows), cfg.out)
    return 0


def cmd_label(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    snapshots = load_snapshots(args.snapshot)
    labels = [lb for path in args.labels for lb in load_labels(path)]
    corpus = merge_labels(snapshots, labels, cfg.now, assume_benign=args.assume_benign)
    if cfg.out is None:
        raise RankAuditError("label needs --out <corpus file>")
    save_corpus(corpus, cfg.out)
    print(f"matched {len(corpus)} excluded {corpus.excluded}", file=sys.stderr)
    return 0


def _write_eval(corpus, out: Path, prefix: str = "") -> list[ev.StatsRow]:
    scores = ev.corpus_scores(corpus)
    stats = ev.stats_from_scores(scores)
    (out / f"{prefix}histogram.csv").write_text(
        ev.histogram_csv(ev.histogram_from_scores(scores)), encoding="utf-8"
    )
    (out / f"{prefix}stats.csv").write_text(ev.stats_csv(stats), encoding="utf-8")
    return stats


def cmd_eval(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    corpus = load_corpus(args.corpus, cfg.now)
    stats = _write_eval(corpus, _out_dir(cfg))
    print(ev.stats_table(stats))
    return 0


def _best_line(best: ev.SweepRow) -> str:
    return (
        f"best threshold {best.threshold}: precision {float(best.precision):.4f} "
        f"recall {float(best.recall):.4f} f1 {float(best.f1):.4f}"
    )


def cmd_sweep(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    corpus = load_corpus(args.corpus, cfg.now)
    rows, best = ev.threshold_sweep(corpus, (args.min, args.max))
    _emit(ev.sweep_csv(rows), cfg.out)
    print(_best_line(best), file=sys.stdout if cfg.out else sys.stderr)
    return 0


def cmd_counterfactual(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    corpus = ev.counterfactual_removed(load_corpus(args.corpus, cfg.now))
    out = _out_dir(cfg)
    stats = _write_eval(corpus, out)
    rows, best = ev.threshold_sweep(corpus, (args.min, args.max))
    (out / "sweep.csv").write_text(ev.sweep_csv(rows), encoding="utf-8")
    print(ev.stats_table(stats))
    print(_best_line(best))
    return 0


def cmd_evade(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    snapshots = load_snapshots(args.snapshot)
    plan = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    techniques = [technique_from_record(rec, cfg.now) for rec in plan]
    index = _load_index(args.index)
    wanted = normalize_name(args.package) if args.package else None
    rows = []
    for pkg, repo in snapshots:
        if wanted and pkg.normalized_name != wanted:
            continue
        report = plan_max_inflation(pkg, repo, techniques, cfg.now, index)
        for i, step in enumerate(report.steps, start=1):
            rec = step.as_record()
            rows.append(
                (pkg.normalized_name, i, rec["technique"], rec["before"], rec["after"],
                 rec["delta"], str(rec["applied"]).lower())
            )
        print(f"{pkg.normalized_name}: {report.initial_score} -> {report.final_score}", file=sys.stderr)
    if wanted and not rows and not any(p.normalized_name == wanted for p, _ in snapshots):
        raise NotFoundError(f"package {args.package!r} not in {args.snapshot}")
    header = ("package", "step", "technique", "before", "after", "delta", "applied")
    _emit(ev.to_csv(header, rows), cfg.out)
    return 0


def cmd_confusion(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    corpus = load_corpus(args.corpus, cfg.now)
    registry = load_registry(args.registry)
    out = _out_dir(cfg)
    records = [
        classify_repo_claim(e.package, e.repo, registry).as_record(e.package) for e in corpus.entries
    ]
    (out / "verdicts.jsonl").write_text(_jsonl(records), encoding="utf-8")
    (out / "verdicts.csv").write_text(
        ev.to_csv(
            ("name", "label", "repo_url", "verdict", "victim", "victim_repo"),
            (
                (r["name"], e.label.verdict, r["repo_url"] or "", r["verdict"], r["victim"] or "",
                 r["victim_repo"] or "")
                for r, e in zip(records, corpus.entries)
            ),
        ),
        encoding="utf-8",
    )
    rows, total = ev.confusion_prevalence(corpus, registry)
    (out / "prevalence.csv").write_text(ev.prevalence_csv(rows, total), encoding="utf-8")
    print(f"confused malicious packages: {total.count} ({total.percentage:.1f}%)")
    return 0


def cmd_fetch_feed(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    cutoff = parse_timestamp(args.cutoff)
    entries = feeds.fetch_feed(args.kind, cutoff, cfg.policy, fetcher)
    _emit(
        _jsonl(
            {
                "name": e.name,
                "version": e.version,
                "published_at": format_timestamp(e.published_at),
                "feed_kind": e.feed_kind,
            }
            for e in entries
        ),
        cfg.out,
    )
    return 0


def _names_from_args(args) -> list[str]:
    names = list(args.names)
    for path in args.from_feed or ():
        with open(path, encoding="utf-8") as fh:
            names.extend(json.loads(line)["name"] for line in fh if line.strip())
    seen, unique = set(), []
    for n in names:
        key = normalize_name(n)
        if key not in seen:
            seen.add(key)
            unique.append(n)
    return unique


def cmd_fetch_package(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    if cfg.out is None:
        raise RankAuditError("fetch-package needs --out <snapshot file>")

    def one(name: str):
        try:
            pkg = pypi.fetch_package_metadata(name, cfg.policy, fetcher, cfg.now)
        except NotFoundError as exc:
            logger.warning("%s: skipped (%s)", name, exc)
            return None
        if args.with_project:
            doc = fetcher.get(
                "librariesio", f"{pkg.normalized_name}.json",
                librariesio.API_ROOT.format(name=pkg.normalized_name),
            )
            pkg = librariesio.enrich_snapshot(pkg, doc)
        repo = None
        if args.with_repo and pkg.repo_url:
            try:
                repo = forge.fetch_repo_metadata(pkg.repo_url, cfg.policy, fetcher, cfg.now)
            except RankAuditError as exc:
                logger.warning("%s: no repository metadata (%s)", pkg.normalized_name, exc)
        return pkg, repo

    names = _names_from_args(args)
    snapshots = [s for s in fetch_many(one, names, cfg.policy.concurrency) if s is not None]
    if names and not snapshots:
        raise NotFoundError("none of the requested packages could be fetched")
    save_snapshots(snapshots, cfg.out)
    print(f"fetched {len(snapshots)} packages", file=sys.stderr)
    return 0


def cmd_fetch_repo(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    repo = forge.fetch_repo_metadata(args.url, cfg.policy, fetcher, cfg.now)
    _emit(_dump(repo_to_record(repo)) + "\n", cfg.out)
    return 0


def cmd_fetch_reference(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    record = librariesio.fetch_reference_record(args.name, cfg.policy, fetcher)
    out = {
        "name": record.name,
        "reported_rank": record.reported_rank,
        "visible": dict(sorted(record.visible.items())),
        "hidden": {flag: getattr(record, flag) for flag in librariesio.HIDDEN},
    }
    if args.snapshot:
        wanted = normalize_name(args.name)
        for pkg, repo in load_snapshots(args.snapshot):
            if pkg.normalized_name == wanted:
                parity = librariesio.parity_report(record, score_breakdown(pkg, repo, cfg.now))
                out["parity"] = parity.as_record()
                break
    _emit(_dump(out) + "\n", cfg.out)
    return 0


def cmd_labels_osv(args, cfg: RunConfig, fetcher: Fetcher) -> int:
    labels = osv.load_osv_labels(args.dir, args.ecosystem)
    labels.sort(key=lambda lb: lb.name)
    if cfg.out is None:
        _emit(_jsonl(label_to_record(lb) for lb in labels), None)
    else:
        save_labels(labels, cfg.out)
    print(f"{len(labels)} malicious labels", file=sys.stderr)
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--offline", action="store_true", help="never touch the network")
    common.add_argument("--now", help="evaluation time, ISO-8601 UTC (default: current time)")
    common.add_argument("--out", type=Path, help="output file or directory")
    common.add_argument("--cache", type=Path, help="cache directory ({cache}/{source}/{key})")
    common.add_argument("--rate-limit", type=float, default=1.0, help="requests per second")
    common.add_argument("--retries", type=int, default=3)
    common.add_argument("--workers", type=int, default=4)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rankaudit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("score", cmd_score, "metric breakdown for one package (or CSV for all)")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--package")
    p.add_argument("--index", help="JSON object mapping dependency name to latest version")

    p = add("label", cmd_label, "join snapshots with labels into a corpus file")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--labels", action="append", default=[], required=True)
    p.add_argument("--assume-benign", action="store_true")

    for name, func, text in (
        ("eval", cmd_eval, "score distributions and summary statistics"),
        ("sweep", cmd_sweep, "threshold sweep (malicious iff score < t)"),
        ("counterfactual", cmd_counterfactual, "mark malicious packages removed, then evaluate"),
    ):
        p = add(name, func, text)
        p.add_argument("--corpus", required=True)
        if name != "eval":
            p.add_argument("--min", type=int, default=ev.DEFAULT_THRESHOLDS[0])
            p.add_argument("--max", type=int, default=ev.DEFAULT_THRESHOLDS[1])

    p = add("evade", cmd_evade, "apply evasion techniques and report score inflation")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--plan", required=True, help="JSON list of technique records")
    p.add_argument("--package")
    p.add_argument("--index")

    p = add("confusion", cmd_confusion, "repository-claim verdicts and prevalence table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--registry", required=True)

    p = add("fetch-feed", cmd_fetch_feed, "new packages / new releases feed")
    p.add_argument("--kind", choices=sorted(feeds.FEED_URLS), default="new_packages")
    p.add_argument("--cutoff", default="1970-01-01T00:00:00Z")

    p = add("fetch-package", cmd_fetch_package, "package metadata snapshots")
    p.add_argument("names", nargs="*")
    p.add_argument("--from-feed", action="append", help="feed entries file from fetch-feed")
    p.add_argument("--with-repo", action="store_true", help="also fetch repository metadata")
    p.add_argument("--with-project", action="store_true", help="take counts/status from the provider")

    p = add("fetch-repo", cmd_fetch_repo, "repository metadata")
    p.add_argument("url")

    p = add("fetch-reference", cmd_fetch_reference, "provider-reported rank and hidden flags")
    p.add_argument("name")
    p.add_argument("--snapshot", help="snapshot file to compute a parity report against")

    p = add("labels-osv", cmd_labels_osv, "malicious labels from an OSV advisory directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--ecosystem", default="PyPI")
    return parser


def run(argv: Sequence[str] | None = None, transport: Transport | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        now = parse_timestamp(args.now) if args.now else utcnow()
    except RankAuditError as exc:
        parser.print_usage(sys.stderr)
        print(f"rankaudit: error: {exc}", file=sys.stderr)
        return 2
    policy = FetchPolicy(
        rate_limit=args.rate_limit,
        max_retries=args.retries,
        cache_dir=args.cache,
        offline=args.offline,
        concurrency=args.workers,
    )
    cfg = RunConfig(args.subcommand, args.out, args.offline, now, policy)
    fetcher = Fetcher(policy, transport)
    try:
        return args.func(args, cfg, fetcher)
    except (RankAuditError, FileNotFoundError, NotADirectoryError, ValueError) as exc:
        print(f"rankaudit {args.subcommand}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

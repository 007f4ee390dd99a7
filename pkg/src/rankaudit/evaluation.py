"""Score distributions, summary statistics, threshold sweeps and prevalence tables."""

from __future__ import annotations

import bisect
import csv
import io
import statistics
from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from rankaudit.confusion import CONFUSED, RepoRegistry, classify_repo_claim
from rankaudit.model import CorpusEntry, LabeledCorpus
from rankaudit.scoring import METRIC_NAMES, score_breakdown

LABELS = ("benign", "malicious")
SUPPORT = (-5, 32)
DEFAULT_THRESHOLDS = (-5, 33)


def corpus_scores(corpus: LabeledCorpus) -> dict[str, list[int]]:
    """Score every entry at the corpus evaluation time, grouped by label."""
    out: dict[str, list[int]] = {label: [] for label in LABELS}
    for entry in corpus.entries:
        s = score_breakdown(entry.package, entry.repo, corpus.evaluation_time).total
        out[entry.label.verdict].append(s)
    return out


# -- distributions -------------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    percentages: Mapping[str, Mapping[int, float]]
    support: tuple[int, int]

    def rows(self) -> list[tuple[int, str, float]]:
        lo, hi = self.support
        return [
            (s, label, self.percentages.get(label, {}).get(s, 0.0))
            for label in LABELS
            for s in range(lo, hi + 1)
        ]


def histogram_from_scores(scores: Mapping[str, Sequence[int]]) -> Histogram:
    lo, hi = SUPPORT
    percentages: dict[str, dict[int, float]] = {}
    for label in LABELS:
        values = list(scores.get(label, ()))
        counts = Counter(values)
        percentages[label] = {s: 100.0 * c / len(values) for s, c in sorted(counts.items())}
        if values:
            lo, hi = min(lo, min(values)), max(hi, max(values))
    return Histogram(percentages, (lo, hi))


def distribution(corpus: LabeledCorpus) -> Histogram:
    return histogram_from_scores(corpus_scores(corpus))


@dataclass(frozen=True)
class StatsRow:
    label: str
    min: int
    max: int
    mean: float
    std: float
    median: float


def stats_from_scores(scores: Mapping[str, Sequence[int]]) -> list[StatsRow]:
    rows = []
    for label in LABELS:
        values = list(scores.get(label, ()))
        if not values:
            continue
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        rows.append(
            StatsRow(
                label,
                min(values),
                max(values),
                statistics.fmean(values),
                std,
                float(statistics.median(values)),
            )
        )
    return rows


def summary_stats(corpus: LabeledCorpus) -> list[StatsRow]:
    """Min/max/mean/sample-std/median per label (labels without entries are omitted)."""
    return stats_from_scores(corpus_scores(corpus))


# -- threshold sweep -----------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    threshold: int
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> Fraction:
        flagged = self.tp + self.fp
        return Fraction(self.tp, flagged) if flagged else Fraction(0)

    @property
    def recall(self) -> Fraction:
        positives = self.tp + self.fn
        return Fraction(self.tp, positives) if positives else Fraction(0)

    @property
    def f1(self) -> Fraction:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else Fraction(0)


def sweep_scores(
    benign: Sequence[int],
    malicious: Sequence[int],
    thresholds: tuple[int, int] = DEFAULT_THRESHOLDS,
) -> tuple[list[SweepRow], SweepRow]:
    """Evaluate "malicious iff score < t" for every integer t in the closed range.

    The best row maximizes F1; ties go to the smallest threshold.
    """
    lo, hi = thresholds
    if lo > hi:
        raise ValueError("empty threshold range")
    ben, mal = sorted(benign), sorted(malicious)
    rows = []
    for t in range(lo, hi + 1):
        tp = bisect.bisect_left(mal, t)
        fp = bisect.bisect_left(ben, t)
        rows.append(SweepRow(t, tp, fp, len(ben) - fp, len(mal) - tp))
    best = rows[0]
    for row in rows[1:]:
        if row.f1 > best.f1:
            best = row
    return rows, best


def threshold_sweep(
    corpus: LabeledCorpus, thresholds: tuple[int, int] = DEFAULT_THRESHOLDS
) -> tuple[list[SweepRow], SweepRow]:
    scores = corpus_scores(corpus)
    return sweep_scores(scores["benign"], scores["malicious"], thresholds)


# -- counterfactual ------------------------------------------------------------


def counterfactual_removed(corpus: LabeledCorpus) -> LabeledCorpus:
    """Copy of ``corpus`` with every malicious package marked as removed."""
    entries = []
    for e in corpus.entries:
        if e.label.verdict == "malicious" and e.package.status != "removed":
            e = CorpusEntry(replace(e.package, status="removed"), e.repo, e.label)
        entries.append(e)
    return replace(corpus, entries=tuple(entries))


# -- prevalence ----------------------------------------------------------------


@dataclass(frozen=True)
class PrevalenceRow:
    victim_repo: str
    count: int
    percentage: float


def confusion_prevalence(
    corpus: LabeledCorpus, registry: RepoRegistry
) -> tuple[list[PrevalenceRow], PrevalenceRow]:
    """Count confused malicious packages per victim repository, plus a total row."""
    malicious = corpus.with_label("malicious")
    counts: Counter[str] = Counter()
    for e in malicious:
        verdict = classify_repo_claim(e.package, e.repo, registry)
        if verdict.verdict == CONFUSED:
            counts[verdict.victim_repo or verdict.victim] += 1
    n = len(malicious)

    def pct(c: int) -> float:
        return 100.0 * c / n if n else 0.0

    rows = [
        PrevalenceRow(victim, c, pct(c))
        for victim, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    total = sum(counts.values())
    return rows, PrevalenceRow("total", total, pct(total))


# -- CSV rendering -------------------------------------------------------------

HISTOGRAM_HEADER = ("score", "label", "percentage")
STATS_HEADER = ("label", "min", "max", "mean", "std", "median")
SWEEP_HEADER = ("threshold", "tp", "fp", "tn", "fn", "precision", "recall", "f1")
PREVALENCE_HEADER = ("victim_repo", "count", "percentage")
SCORES_HEADER = ("name", "label") + METRIC_NAMES + ("total",)


def fmt(value) -> str:
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.4f}"


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def histogram_csv(hist: Histogram) -> str:
    return to_csv(HISTOGRAM_HEADER, hist.rows())


def stats_csv(rows: Sequence[StatsRow]) -> str:
    return to_csv(STATS_HEADER, ((r.label, r.min, r.max, r.mean, r.std, r.median) for r in rows))


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    return to_csv(
        SWEEP_HEADER,
        ((r.threshold, r.tp, r.fp, r.tn, r.fn, r.precision, r.recall, r.f1) for r in rows),
    )


def prevalence_csv(rows: Sequence[PrevalenceRow], total: PrevalenceRow) -> str:
    return to_csv(
        PREVALENCE_HEADER, ((r.victim_repo, r.count, r.percentage) for r in [*rows, total])
    )


def stats_table(rows: Sequence[StatsRow]) -> str:
    """Plain-text table laid out as Min / Max / Mean ± Std / Median columns."""
    lines = [f"{'':<10}{'Min':>6}{'Max':>6}{'Mean ± Std':>18}{'Median':>8}"]
    for r in rows:
        lines.append(
            f"{r.label:<10}{r.min:>6}{r.max:>6}{f'{r.mean:.2f} ± {r.std:.2f}':>18}{r.median:>8g}"
        )
    return "\n".join(lines)

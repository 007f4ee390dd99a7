"""Run the whole offline pipeline over the checked-in fixture cache.

feed -> package snapshots -> OSV labels -> corpus -> scores, eval, sweep,
counterfactual, confusion and evasion outputs. Every step goes through the
CLI so the run doubles as an end-to-end check.

    python3 scripts/run_fixture_pipeline.py --out /tmp/run
    python3 scripts/run_fixture_pipeline.py --out tests/fixtures/golden_e2e --golden
"""

from __future__ import annotations

import argparse
import contextlib
import io
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

from rankaudit.cli import run

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

# files compared byte for byte against tests/fixtures/golden_e2e
GOLDEN_FILES = (
    "snapshots.lines",
    "labels.lines",
    "corpus.lines",
    "scores.csv",
    "eval/histogram.csv",
    "eval/stats.csv",
    "sweep.csv",
    "counterfactual/histogram.csv",
    "counterfactual/stats.csv",
    "counterfactual/sweep.csv",
    "confusion/verdicts.csv",
    "confusion/verdicts.jsonl",
    "confusion/prevalence.csv",
    "evade.csv",
)


@dataclass(frozen=True)
class PipelineConfig:
    out: Path
    now: str = "2024-12-01T00:00:00Z"
    fixtures: Path = FIXTURES
    workers: int = 4
    quiet: bool = False  # swallow what the CLI prints


def run_pipeline(cfg: PipelineConfig, transport=None) -> None:
    out, fx = cfg.out, cfg.fixtures
    out.mkdir(parents=True, exist_ok=True)
    common = ["--offline", "--now", cfg.now, "--cache", str(fx / "cache"), "--workers", str(cfg.workers)]

    def step(*argv):
        if cfg.quiet:
            with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
                code = run([*argv, *common], transport=transport)
        else:
            code = run([*argv, *common], transport=transport)
        if code != 0:
            raise RuntimeError(f"step failed ({code}): {' '.join(argv)}")

    step("fetch-feed", "--kind", "new_packages", "--out", str(out / "feed.jsonl"))
    step("fetch-package", "--from-feed", str(out / "feed.jsonl"), "--with-repo", "--with-project",
         "--out", str(out / "snapshots.lines"))
    step("labels-osv", "--dir", str(fx / "osv"), "--out", str(out / "labels.lines"))
    step("label", "--snapshot", str(out / "snapshots.lines"), "--labels", str(out / "labels.lines"),
         "--assume-benign", "--out", str(out / "corpus.lines"))
    step("score", "--snapshot", str(out / "snapshots.lines"), "--out", str(out / "scores.csv"))
    corpus = str(out / "corpus.lines")
    step("eval", "--corpus", corpus, "--out", str(out / "eval"))
    step("sweep", "--corpus", corpus, "--out", str(out / "sweep.csv"))
    step("counterfactual", "--corpus", corpus, "--out", str(out / "counterfactual"))
    step("confusion", "--corpus", corpus, "--registry", str(fx / "confusion" / "registry.lines"),
         "--out", str(out / "confusion"))
    step("evade", "--snapshot", str(fx / "cli" / "minimal.lines"), "--plan", str(fx / "plan.json"),
         "--out", str(out / "evade.csv"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--now", default=PipelineConfig.now)
    parser.add_argument("--golden", action="store_true", help="keep only the compared files")
    args = parser.parse_args(argv)
    work = args.out / ".work" if args.golden else args.out
    run_pipeline(PipelineConfig(out=work, now=args.now))
    if args.golden:
        for rel in GOLDEN_FILES:
            dest = args.out / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(work / rel, dest)
        shutil.rmtree(work)
    return 0


if __name__ == "__main__":
    sys.exit(main())

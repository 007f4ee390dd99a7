import csv
import importlib.util
import io
import json
import sys
import time
from pathlib import Path

import jsonschema
import pytest

from conftest import FIXTURES
from rankaudit.cli import run
from rankaudit.ingest.transport import CountingTransport
from rankaudit.scoring import METRIC_NAMES

NOW = "2024-12-01T00:00:00Z"
OFFLINE = ["--offline", "--now", NOW, "--cache", str(FIXTURES / "cache")]
SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


def load_pipeline():
    spec = importlib.util.spec_from_file_location("run_fixture_pipeline", SCRIPTS / "run_fixture_pipeline.py")
    module = importlib.util.module_from_spec(spec)
    sys.modules[spec.name] = module
    spec.loader.exec_module(module)
    return module


SCORE_SCHEMA = {
    "type": "object",
    "required": ["name", *METRIC_NAMES, "total"],
    "properties": {"name": {"type": "string"}, **{m: {"type": "integer"} for m in (*METRIC_NAMES, "total")}},
    "additionalProperties": False,
}
VERDICT_SCHEMA = {
    "type": "object",
    "required": ["name", "repo_url", "verdict", "victim", "victim_repo", "evidence"],
    "properties": {
        "name": {"type": "string"},
        "repo_url": {"type": ["string", "null"]},
        "verdict": {"enum": ["verified", "confused", "unverifiable"]},
        "victim": {"type": ["string", "null"]},
        "victim_repo": {"type": ["string", "null"]},
        "evidence": {"type": "array", "minItems": 1, "items": {"type": "string"}},
    },
    "additionalProperties": False,
}
REFERENCE_SCHEMA = {
    "type": "object",
    "required": ["name", "reported_rank", "visible", "hidden"],
    "properties": {
        "reported_rank": {"type": "integer"},
        "visible": {"type": "object", "additionalProperties": {"type": "integer"}},
        "hidden": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "parity": {
            "type": "object",
            "required": ["status", "reported_rank", "computed_total", "metric_mismatches"],
            "properties": {"status": {"enum": ["match", "mismatch"]}},
        },
    },
}


def rows(path):
    return list(csv.reader(io.StringIO(Path(path).read_text())))


# -- exit codes -----------------------------------------------------------------------


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_bad_now_is_usage_error(capsys):
    assert run(["score", "--snapshot", str(FIXTURES / "cli" / "minimal.lines"), "--now", "yesterday"]) == 2


def test_missing_required_flag():
    assert run(["score"]) == 2


def test_missing_package_is_domain_error(capsys):
    code = run(["score", "--snapshot", str(FIXTURES / "cli" / "minimal.lines"), "--package", "nope", *OFFLINE])
    assert code == 1
    assert "nope" in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    assert run(["eval", "--corpus", str(tmp_path / "none.lines"), "--out", str(tmp_path), *OFFLINE]) == 1


def test_dir_outputs_need_out(capsys):
    assert run(["eval", "--corpus", str(FIXTURES / "cli" / "labeled.lines"), *OFFLINE]) == 1


# -- worked examples -------------------------------------------------------------------


def test_score_minimal(capsys):
    assert run(["score", "--snapshot", str(FIXTURES / "cli" / "minimal.lines"), "--package", "minimal", *OFFLINE]) == 0
    rec = json.loads(capsys.readouterr().out)
    jsonschema.validate(rec, SCORE_SCHEMA)
    assert rec["total"] == 2
    assert {m for m in METRIC_NAMES if rec[m]} == {"follows_semver", "recent_release"}


def test_sweep_example(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert run(["sweep", "--corpus", str(FIXTURES / "cli" / "labeled.lines"), "--out", str(out), *OFFLINE]) == 0
    assert "best threshold 7: precision 0.6000 recall 1.0000 f1 0.7500" in capsys.readouterr().out
    table = rows(out)
    assert table[0] == ["threshold", "tp", "fp", "tn", "fn", "precision", "recall", "f1"]
    assert len(table) == 1 + 39


def test_eval_prints_table(tmp_path, capsys):
    assert run(["eval", "--corpus", str(FIXTURES / "cli" / "labeled.lines"), "--out", str(tmp_path), *OFFLINE]) == 0
    out = capsys.readouterr().out
    assert "Mean ± Std" in out and "4.33 ± 3.06" in out
    assert rows(tmp_path / "stats.csv")[0] == ["label", "min", "max", "mean", "std", "median"]
    assert rows(tmp_path / "histogram.csv")[0] == ["score", "label", "percentage"]


def test_evade_example(tmp_path):
    out = tmp_path / "evade.csv"
    argv = ["evade", "--snapshot", str(FIXTURES / "cli" / "minimal.lines"), "--plan", str(FIXTURES / "plan.json"),
            "--out", str(out), *OFFLINE]
    assert run(argv) == 0
    table = rows(out)
    assert table[0] == ["package", "step", "technique", "before", "after", "delta", "applied"]
    assert table[-1][4] == "19"


def test_confusion_outputs(tmp_path, capsys):
    argv = ["confusion", "--corpus", str(FIXTURES / "confusion" / "corpus.lines"),
            "--registry", str(FIXTURES / "confusion" / "registry.lines"), "--out", str(tmp_path), *OFFLINE]
    assert run(argv) == 0
    assert "11 (78.6%)" in capsys.readouterr().out
    for line in (tmp_path / "verdicts.jsonl").read_text().splitlines():
        jsonschema.validate(json.loads(line), VERDICT_SCHEMA)
    assert rows(tmp_path / "verdicts.csv")[0] == ["name", "label", "repo_url", "verdict", "victim", "victim_repo"]
    assert rows(tmp_path / "prevalence.csv")[-1] == ["total", "11", "78.5714"]


def test_fetch_reference_with_parity(capsys):
    argv = ["fetch-reference", "requests", "--snapshot", str(FIXTURES / "golden_e2e" / "snapshots.lines"), *OFFLINE]
    assert run(argv) == 0
    rec = json.loads(capsys.readouterr().out)
    jsonschema.validate(rec, REFERENCE_SCHEMA)
    assert rec["parity"]["status"] == "match" and rec["reported_rank"] == 26


def test_fetch_package_skips_unknown_names(tmp_path, capsys):
    out = tmp_path / "s.lines"
    assert run(["fetch-package", "sampleproject", "no-such-pkg", "--out", str(out), *OFFLINE]) == 0
    assert len(out.read_text().splitlines()) == 1
    assert run(["fetch-package", "no-such-pkg", "--out", str(out), *OFFLINE]) == 1


def test_fetch_repo(capsys):
    assert run(["fetch-repo", "https://github.com/pypa/sampleproject", *OFFLINE]) == 0
    assert json.loads(capsys.readouterr().out)["stars"] > 5000


def test_labels_osv_to_stdout(capsys):
    assert run(["labels-osv", "--dir", str(FIXTURES / "osv"), *OFFLINE]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 14
    assert [json.loads(line)["name"] for line in lines] == sorted(json.loads(line)["name"] for line in lines)


def test_label_conflict_is_domain_error(tmp_path):
    labels = tmp_path / "l.lines"
    labels.write_text(
        '{"name": "minimal", "verdict": "benign", "source": "manual", "advisory_id": null}\n'
        '{"name": "minimal", "verdict": "malicious", "source": "osv", "advisory_id": "MAL-1"}\n'
    )
    argv = ["label", "--snapshot", str(FIXTURES / "cli" / "minimal.lines"), "--labels", str(labels),
            "--out", str(tmp_path / "c.lines"), *OFFLINE]
    assert run(argv) == 1


# -- offline guarantee, determinism and golden outputs ------------------------------------


def test_offline_pipeline_never_touches_transport(tmp_path):
    transport = CountingTransport()
    pipeline = load_pipeline()
    pipeline.run_pipeline(pipeline.PipelineConfig(out=tmp_path), transport=transport)
    assert transport.calls == 0


def test_offline_cache_miss_does_not_fall_back_to_network(tmp_path):
    transport = CountingTransport()
    code = run(["fetch-package", "brand-new-thing", "--out", str(tmp_path / "s.lines"), *OFFLINE], transport)
    assert code == 1 and transport.calls == 0


def test_pipeline_is_deterministic(tmp_path):
    pipeline = load_pipeline()
    a, b = tmp_path / "a", tmp_path / "b"
    pipeline.run_pipeline(pipeline.PipelineConfig(out=a, workers=1))
    pipeline.run_pipeline(pipeline.PipelineConfig(out=b, workers=8))
    for rel in pipeline.GOLDEN_FILES:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_golden_end_to_end(tmp_path):
    pipeline = load_pipeline()
    start = time.monotonic()
    pipeline.run_pipeline(pipeline.PipelineConfig(out=tmp_path))
    assert time.monotonic() - start < 120
    golden = FIXTURES / "golden_e2e"
    for rel in pipeline.GOLDEN_FILES:
        assert (tmp_path / rel).read_bytes() == (golden / rel).read_bytes(), rel


@pytest.mark.parametrize("rel", ["scores.csv", "eval/histogram.csv", "sweep.csv", "confusion/prevalence.csv"])
def test_golden_csvs_have_four_decimal_floats(rel):
    for row in rows(FIXTURES / "golden_e2e" / rel)[1:]:
        for cell in row:
            if "." in cell and cell.replace(".", "").replace("-", "").isdigit():
                assert len(cell.split(".")[1]) == 4, (rel, cell)

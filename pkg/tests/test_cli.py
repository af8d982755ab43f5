"""CLI tests via click's runner; no subprocess, no network."""

import io
import json
import zipfile

import pytest
from click.testing import CliRunner
from conftest import FIXTURES

from debias.cli import main

VOCAB = str(FIXTURES / "vocabulary.json")


@pytest.fixture
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "debias" in result.output


def test_detect_from_file(runner, tmp_path):
    doc = tmp_path / "card.txt"
    doc.write_text("a savage tale of the third world", encoding="utf-8")
    result = runner.invoke(main, [
        "detect", "--vocab", VOCAB, "--input", str(doc),
        "--no-ner", "--no-llm"])
    assert result.exit_code == 0, result.output
    body = json.loads(result.stdout)
    assert body["document_id"] == "card.txt"
    assert [a["term_id"] for a in body["annotations"]] == ["term:0004", "term:0002"]


def test_detect_from_stdin_to_file(runner, tmp_path):
    out = tmp_path / "out.json"
    result = runner.invoke(main, [
        "detect", "--vocab", VOCAB, "--input", "-", "--output", str(out),
        "--no-ner", "--no-llm"],
        input="a primitive design\n")
    assert result.exit_code == 0, result.output
    body = json.loads(out.read_text(encoding="utf-8"))
    assert body["document_id"] == "stdin"
    assert [a["surface"] for a in body["annotations"]] == ["primitive"]


def test_detect_diagnostics_flag(runner, tmp_path):
    doc = tmp_path / "card.txt"
    doc.write_text("records of the Third World", encoding="utf-8")
    result = runner.invoke(main, [
        "detect", "--vocab", VOCAB, "--input", str(doc),
        "--no-llm", "--diagnostics"])
    body = json.loads(result.stdout)
    assert body["annotations"] == []
    assert [d["filtered_by"] for d in body["diagnostics"]] == ["ner"]


def test_detect_requires_llm_endpoint_when_enabled(runner, tmp_path, monkeypatch):
    monkeypatch.delenv("DEBIAS_LLM_ENDPOINT", raising=False)
    doc = tmp_path / "card.txt"
    doc.write_text("plain text", encoding="utf-8")
    result = runner.invoke(main, [
        "detect", "--vocab", VOCAB, "--input", str(doc)])
    assert result.exit_code == 2
    assert "--no-llm" in result.output


def test_detect_unknown_language_rejected(runner, tmp_path):
    doc = tmp_path / "card.txt"
    doc.write_text("x", encoding="utf-8")
    result = runner.invoke(main, [
        "detect", "--vocab", VOCAB, "--lang", "xx", "--input", str(doc),
        "--no-llm"])
    assert result.exit_code == 2


def test_batch_roundtrip(runner, tmp_path):
    src = tmp_path / "in.zip"
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        archive.writestr("a.txt", "a savage tale")
        archive.writestr("b.txt", "nothing here")
    src.write_bytes(buffer.getvalue())
    out = tmp_path / "out.zip"
    result = runner.invoke(main, [
        "batch", "--zip", str(src), "--lang", "en", "--out", str(out),
        "--vocab", VOCAB, "--no-llm"])
    assert result.exit_code == 0, result.output
    archive = zipfile.ZipFile(out)
    lines = archive.read("annotations.jsonl").decode("utf-8").splitlines()
    assert len(lines) == 2
    report = json.loads(archive.read("report.json"))
    assert report["documents"] == 2
    assert report["annotations"] == 1
    assert "2 documents" in result.stderr


def test_eval_reports_precision(runner):
    result = runner.invoke(main, [
        "eval", "--dataset", str(FIXTURES / "ablation_gold.jsonl"),
        "--vocab", VOCAB, "--no-ner", "--no-llm"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.stdout)
    assert report["micro_precision"] == pytest.approx(14 / 20)
    assert report["true_positives"] == 14


def test_eval_reports_rejected_lines(runner, tmp_path):
    dataset = tmp_path / "gold.jsonl"
    dataset.write_text(
        '{"text": "a savage tale", "language": "en", "term": "savage", '
        '"char_start": 2, "char_end": 8, "gold": "contentious"}\n'
        "not json\n", encoding="utf-8")
    result = runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--vocab", VOCAB,
        "--no-ner", "--no-llm"])
    assert result.exit_code == 0
    assert "skipped 1 malformed" in result.stderr
    assert "invalid_json" in result.stderr


def test_bench_reports_throughput(runner):
    result = runner.invoke(main, [
        "bench", "--corpus", str(FIXTURES / "ablation_corpus"),
        "--vocab", VOCAB, "--runs", "2", "--warmup", "0", "--no-llm"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.stdout)
    assert report["mean_chars_per_second"] > 0
    assert len(report["per_run_chars_per_second"]) == 2


def test_ablation_with_mock_llm(runner):
    result = runner.invoke(main, [
        "ablation", "--dataset", str(FIXTURES / "ablation_gold.jsonl"),
        "--corpus", str(FIXTURES / "ablation_corpus"),
        "--vocab", VOCAB, "--runs", "1", "--warmup", "0", "--mock-llm"])
    assert result.exit_code == 0, result.output
    table = json.loads(result.stdout)
    assert table["columns"] == ["llm", "ner", "precision", "chars_per_second"]
    assert [(row["llm"], row["ner"]) for row in table["rows"]] == [
        (False, False), (False, True), (True, False), (True, True)]
    assert "Precision" in result.stderr


def test_ablation_requires_some_llm(runner, monkeypatch):
    monkeypatch.delenv("DEBIAS_LLM_ENDPOINT", raising=False)
    result = runner.invoke(main, [
        "ablation", "--dataset", str(FIXTURES / "ablation_gold.jsonl"),
        "--corpus", str(FIXTURES / "ablation_corpus"), "--vocab", VOCAB])
    assert result.exit_code == 2
    assert "--mock-llm" in result.output


def test_vocab_from_config_file(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"vocab": VOCAB}), encoding="utf-8")
    result = runner.invoke(main, [
        "--config", str(cfg),
        "eval", "--dataset", str(FIXTURES / "ablation_gold.jsonl"),
        "--no-ner", "--no-llm"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.stdout)["micro_precision"] == pytest.approx(14 / 20)


def test_vocab_from_environment(runner, tmp_path):
    doc = tmp_path / "card.txt"
    doc.write_text("a savage tale", encoding="utf-8")
    result = runner.invoke(main, [
        "detect", "--input", str(doc), "--no-ner", "--no-llm"],
        env={"DEBIAS_VOCAB": VOCAB})
    assert result.exit_code == 0, result.output
    assert len(json.loads(result.stdout)["annotations"]) == 1


def test_vocab_flag_beats_config_file(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"vocab": str(tmp_path / "missing.json")}),
                   encoding="utf-8")
    doc = tmp_path / "card.txt"
    doc.write_text("a savage tale", encoding="utf-8")
    result = runner.invoke(main, [
        "--config", str(cfg),
        "detect", "--vocab", VOCAB, "--input", str(doc),
        "--no-ner", "--no-llm"])
    assert result.exit_code == 0, result.output


def test_missing_vocab_everywhere_is_a_usage_error(runner, tmp_path, monkeypatch):
    monkeypatch.delenv("DEBIAS_VOCAB", raising=False)
    doc = tmp_path / "card.txt"
    doc.write_text("x", encoding="utf-8")
    result = runner.invoke(main, ["detect", "--input", str(doc), "--no-llm"])
    assert result.exit_code == 2
    assert "no vocabulary" in result.output


def test_config_file_must_be_json_object(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]", encoding="utf-8")
    result = runner.invoke(main, ["--config", str(cfg), "detect",
                                  "--input", "-", "--no-llm"])
    assert result.exit_code == 2
    assert "JSON object" in result.output

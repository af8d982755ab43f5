"""Precision, throughput, and stage-ablation measurement.

Precision is the primary quality metric: the gold dataset provides a
detection judgment per record, and a predicted annotation that overlaps the
gold span with the same term label counts as a true or false positive by the
record's gold value.  Recall is out of scope by design, so unmatched gold
records are reported only as an informational count.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import SUPPORTED_LANGUAGES
from .disambiguator import LlmClient
from .pipeline import PipelineConfig, PipelineResources, detect

GOLD_LABELS = ("contentious", "not_contentious")


@dataclass(frozen=True)
class EvalRecord:
    text: str
    language: str
    term: str
    char_start: int
    char_end: int
    gold: str  # contentious | not_contentious
    source: str = ""


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass
class EvalDataset:
    records: list[EvalRecord] = field(default_factory=list)
    rejects: list[RejectedLine] = field(default_factory=list)


_REQUIRED_STR = ("text", "language", "term", "gold")
_REQUIRED_INT = ("char_start", "char_end")


def _validate_record(raw: dict) -> str | None:
    """Reject reason for one parsed JSONL object, or None when valid."""
    for name in _REQUIRED_STR + _REQUIRED_INT:
        if name not in raw:
            return f"missing_field:{name}"
    for name in _REQUIRED_STR:
        if not isinstance(raw[name], str):
            return f"missing_field:{name}"
    for name in _REQUIRED_INT:
        # bool is an int subclass; reject it explicitly
        if not isinstance(raw[name], int) or isinstance(raw[name], bool):
            return "invalid_span"
    if raw["language"] not in SUPPORTED_LANGUAGES:
        return "unsupported_language"
    if raw["gold"] not in GOLD_LABELS:
        return "bad_gold_label"
    if not (0 <= raw["char_start"] < raw["char_end"] <= len(raw["text"])):
        return "span_out_of_bounds"
    return None


def load_eval_dataset(path: str | Path) -> EvalDataset:
    """Read gold JSONL; bad lines go to the rejects report, never abort."""
    dataset = EvalDataset()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError:
                dataset.rejects.append(RejectedLine(line_no, "invalid_json"))
                continue
            if not isinstance(raw, dict):
                dataset.rejects.append(RejectedLine(line_no, "not_an_object"))
                continue
            reason = _validate_record(raw)
            if reason is not None:
                dataset.rejects.append(RejectedLine(line_no, reason))
                continue
            dataset.records.append(EvalRecord(
                text=raw["text"], language=raw["language"], term=raw["term"],
                char_start=raw["char_start"], char_end=raw["char_end"],
                gold=raw["gold"], source=str(raw.get("source", "")),
            ))
    return dataset


@dataclass
class LanguageCounts:
    true_positives: int = 0
    false_positives: int = 0
    unmatched_gold: int = 0

    @property
    def precision(self) -> float | None:
        judged = self.true_positives + self.false_positives
        return self.true_positives / judged if judged else None


@dataclass
class PrecisionReport:
    per_language: dict[str, LanguageCounts] = field(default_factory=dict)

    @property
    def true_positives(self) -> int:
        return sum(c.true_positives for c in self.per_language.values())

    @property
    def false_positives(self) -> int:
        return sum(c.false_positives for c in self.per_language.values())

    @property
    def unmatched_gold(self) -> int:
        return sum(c.unmatched_gold for c in self.per_language.values())

    @property
    def micro_precision(self) -> float | None:
        """Primary aggregate: pooled counts across languages."""
        judged = self.true_positives + self.false_positives
        return self.true_positives / judged if judged else None

    @property
    def macro_precision(self) -> float | None:
        values = [c.precision for c in self.per_language.values() if c.precision is not None]
        return sum(values) / len(values) if values else None

    def to_dict(self) -> dict:
        return {
            "per_language": {
                lang: {
                    "true_positives": c.true_positives,
                    "false_positives": c.false_positives,
                    "unmatched_gold": c.unmatched_gold,
                    "precision": c.precision,
                }
                for lang, c in sorted(self.per_language.items())
            },
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "unmatched_gold": self.unmatched_gold,
            "micro_precision": self.micro_precision,
            "macro_precision": self.macro_precision,
        }


def _spans_overlap(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    return a_start < b_end and b_start < a_end


def compute_precision(
    dataset: EvalDataset,
    config: PipelineConfig,
    resources: PipelineResources,
    llm_client: LlmClient | None = None,
    ner_backend=None,
) -> PrecisionReport:
    """Run detection over every record and score predictions against gold.

    A prediction matches its record when the term labels are equal
    case-insensitively and the spans overlap; exact span equality is not
    required because gold offsets may follow a different tokenization.
    """
    report = PrecisionReport()
    for record in dataset.records:
        counts = report.per_language.setdefault(record.language, LanguageCounts())
        record_config = replace(config, language=record.language)
        doc = detect(record.text, record_config, resources,
                     llm_client=llm_client, ner_backend=ner_backend)
        matched = 0
        for ann in doc.annotations:
            label = resources.graph.term(ann.term_id).label
            if label.casefold() != record.term.casefold():
                continue
            if _spans_overlap(ann.char_start, ann.char_end,
                              record.char_start, record.char_end):
                matched += 1
        if matched == 0:
            counts.unmatched_gold += 1
        elif record.gold == "contentious":
            counts.true_positives += matched
        else:
            counts.false_positives += matched
    return report


@dataclass
class ThroughputReport:
    corpus_characters: int
    per_run_chars_per_second: list[float]
    mean_chars_per_second: float
    warmup: int
    config: dict

    @property
    def runs(self) -> int:
        return len(self.per_run_chars_per_second)

    def to_dict(self) -> dict:
        return {
            "corpus_characters": self.corpus_characters,
            "runs": self.runs,
            "warmup": self.warmup,
            "per_run_chars_per_second": list(self.per_run_chars_per_second),
            "mean_chars_per_second": self.mean_chars_per_second,
            "config": dict(self.config),
        }


def _config_snapshot(config: PipelineConfig) -> dict:
    return {
        "language": config.language,
        "ner_enabled": config.ner_enabled,
        "llm_enabled": config.llm_enabled,
        "ner_backend": config.ner_backend,
        "model": config.llm.model,
    }


def load_corpus(corpus_dir: str | Path) -> list[tuple[str, str]]:
    """(file name, text) for every *.txt under the directory, name-sorted."""
    paths = sorted(Path(corpus_dir).glob("*.txt"))
    return [(p.name, p.read_text(encoding="utf-8")) for p in paths]


def measure_throughput(
    corpus_dir: str | Path,
    config: PipelineConfig,
    resources: PipelineResources,
    runs: int = 5,
    warmup: int = 1,
    llm_client: LlmClient | None = None,
    ner_backend=None,
) -> ThroughputReport:
    """Timed sequential full-corpus passes; characters are Unicode scalars.

    Warmup passes run the identical work but are not recorded, so caches and
    lazy initialization do not distort the first timed run.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    texts = [text for _, text in load_corpus(corpus_dir)]
    total_chars = sum(len(t) for t in texts)
    if not texts or total_chars == 0:
        raise ValueError(f"empty corpus: {corpus_dir}")

    def one_pass():
        for text in texts:
            detect(text, config, resources, llm_client=llm_client, ner_backend=ner_backend)

    for _ in range(warmup):
        one_pass()
    per_run = []
    for _ in range(runs):
        started = time.perf_counter()
        one_pass()
        elapsed = time.perf_counter() - started
        per_run.append(total_chars / elapsed)
    return ThroughputReport(
        corpus_characters=total_chars,
        per_run_chars_per_second=per_run,
        mean_chars_per_second=sum(per_run) / len(per_run),
        warmup=warmup,
        config=_config_snapshot(config),
    )


@dataclass(frozen=True)
class AblationRow:
    llm: bool
    ner: bool
    precision: float | None
    chars_per_second: float


@dataclass
class AblationTable:
    """Four stage-toggle rows, fixed layout: (off,off), (off,on), (on,off), (on,on)."""

    rows: list[AblationRow]

    def to_dict(self) -> dict:
        return {
            "columns": ["llm", "ner", "precision", "chars_per_second"],
            "rows": [
                {"llm": r.llm, "ner": r.ner, "precision": r.precision,
                 "chars_per_second": r.chars_per_second}
                for r in self.rows
            ],
        }

    def render_text(self) -> str:
        def onoff(flag: bool) -> str:
            return "on" if flag else "off"

        lines = [f"{'LLM':<4} {'NER':<4} {'Precision':>10} {'Chars/sec':>12}"]
        for r in self.rows:
            precision = f"{r.precision:.4f}" if r.precision is not None else "n/a"
            lines.append(
                f"{onoff(r.llm):<4} {onoff(r.ner):<4} {precision:>10} {r.chars_per_second:>12.0f}")
        return "\n".join(lines)


ABLATION_GRID = ((False, False), (False, True), (True, False), (True, True))


def run_ablation(
    dataset: EvalDataset,
    corpus_dir: str | Path,
    resources: PipelineResources,
    llm_backend,
    config: PipelineConfig | None = None,
    runs: int = 5,
    warmup: int = 1,
) -> AblationTable:
    """Precision and throughput for every (LLM, NER) toggle combination.

    The same backend instance serves all rows (so a scripted mock's call
    counter spans the whole grid), but each measurement gets a fresh client
    so one row's verdict cache cannot subsidize another's timings.
    """
    if config is None:
        config = PipelineConfig()
    rows = []
    for llm_on, ner_on in ABLATION_GRID:
        row_config = replace(config, llm_enabled=llm_on, ner_enabled=ner_on)

        def fresh_client() -> LlmClient | None:
            return LlmClient(row_config.llm, backend=llm_backend) if llm_on else None

        precision_report = compute_precision(
            dataset, row_config, resources, llm_client=fresh_client())
        throughput = measure_throughput(
            corpus_dir, row_config, resources, runs=runs, warmup=warmup,
            llm_client=fresh_client())
        rows.append(AblationRow(
            llm=llm_on, ner=ner_on,
            precision=precision_report.micro_precision,
            chars_per_second=throughput.mean_chars_per_second,
        ))
    return AblationTable(rows)

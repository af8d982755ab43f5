"""End-to-end detection: preprocess, match, NER filter, LLM disambiguation.

This module wires the stage modules together and turns surviving matches
into enriched annotations carrying the vocabulary's contextual guidance.
Each filter stage can be toggled off independently, and both are purely
subtractive: enabling a filter never adds an annotation.
"""

from __future__ import annotations

import hashlib
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from . import SUPPORTED_LANGUAGES
from .disambiguator import (
    LlmBackendError,
    LlmClient,
    LlmClientConfig,
    PromptTemplate,
    disambiguate,
    load_templates,
)
from .matcher import MatcherAutomaton, RawMatch, compile_patterns, find_matches
from .ner import ExternalNerBackend, HeuristicNerBackend, detect_entities, filter_matches
from .textproc import TextResources, load_text_resources, preprocess
from .vocabulary import TermIndex, VocabularyGraph, build_term_index, load_vocabulary, lookup_issue

NER_BACKENDS = ("heuristic", "external")


class PipelineStageError(RuntimeError):
    """A stage failed; `stage` names which one so callers can map it to a
    transport-level error (the service turns stage="llm" into a 502)."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    language: str = "en"
    ner_enabled: bool = True
    llm_enabled: bool = True
    ner_backend: str = "heuristic"  # heuristic | external
    ner_endpoint: str = ""
    llm: LlmClientConfig = field(default_factory=LlmClientConfig)
    diagnostic_mode: bool = False
    context_window: int = 64

    def __post_init__(self):
        if self.language not in SUPPORTED_LANGUAGES:
            raise ValueError(f"unsupported language: {self.language!r}")
        if self.ner_backend not in NER_BACKENDS:
            raise ValueError(f"unknown ner backend: {self.ner_backend!r}")
        if self.ner_enabled and self.ner_backend == "external" and not self.ner_endpoint:
            raise ValueError("external ner backend needs ner_endpoint")


@dataclass(frozen=True)
class Annotation:
    term_id: str
    issue_id: str
    surface: str
    char_start: int
    char_end: int
    ambiguous: bool
    via_compound: bool
    llm_verdict: str  # contentious | skipped
    suggestion_note: str
    suggested_terms: tuple[str, ...]
    categories: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "term_id": self.term_id,
            "issue_id": self.issue_id,
            "surface": self.surface,
            "char_start": self.char_start,
            "char_end": self.char_end,
            "ambiguous": self.ambiguous,
            "via_compound": self.via_compound,
            "llm_verdict": self.llm_verdict,
            "suggestion_note": self.suggestion_note,
            "suggested_terms": list(self.suggested_terms),
            "categories": list(self.categories),
        }


@dataclass(frozen=True)
class Diagnostic:
    """A detection removed by a filter, kept for provenance."""

    term_id: str
    char_start: int
    char_end: int
    filtered_by: str  # ner | llm | llm_unparseable

    def to_dict(self) -> dict:
        return {
            "term_id": self.term_id,
            "char_start": self.char_start,
            "char_end": self.char_end,
            "filtered_by": self.filtered_by,
        }


@dataclass
class AnnotatedDocument:
    document_id: str
    language: str
    text_sha256: str
    annotations: list[Annotation]
    diagnostics: list[Diagnostic]
    timing_ms: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "document_id": self.document_id,
            "language": self.language,
            "text_sha256": self.text_sha256,
            "annotations": [a.to_dict() for a in self.annotations],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "timing_ms": dict(self.timing_ms),
        }


@dataclass
class PipelineResources:
    """Everything detect() needs, loaded once and shared read-only."""

    text: TextResources
    graph: VocabularyGraph
    index: TermIndex
    automatons: dict[str, MatcherAutomaton]
    templates: dict[tuple[str, str], PromptTemplate]

    def automaton(self, language: str) -> MatcherAutomaton:
        return self.automatons[language]


def load_resources(
    vocab: str | Path | IO,
    dicts_dir: str | Path | None = None,
    templates_path: str | Path | None = None,
    languages: Iterable[str] = SUPPORTED_LANGUAGES,
) -> PipelineResources:
    """Load and index every artifact the pipeline consumes.

    `vocab` is a path or an open stream of the vocabulary JSON; dictionaries
    and templates fall back to the bundled data when not given.
    """
    languages = tuple(languages)
    if hasattr(vocab, "read"):
        graph = load_vocabulary(vocab)
    else:
        with open(vocab, encoding="utf-8") as handle:
            graph = load_vocabulary(handle)
    text = load_text_resources(dicts_dir=dicts_dir, languages=languages)
    index = build_term_index(graph, text, languages=languages)
    automatons = {lang: compile_patterns(index, lang) for lang in languages}
    templates = load_templates(templates_path)
    return PipelineResources(text, graph, index, automatons, templates)


def _make_ner_backend(config: PipelineConfig, resources: PipelineResources):
    if config.ner_backend == "external":
        return ExternalNerBackend(config.ner_endpoint)
    return HeuristicNerBackend(resources.text)


def _annotate(
    match: RawMatch, doc_text: str, graph: VocabularyGraph, llm_verdict: str,
) -> Annotation:
    payload = lookup_issue(graph, match.term_id)
    term = graph.term(match.term_id)
    return Annotation(
        term_id=match.term_id,
        issue_id=payload.issue.id,
        surface=doc_text[match.char_start:match.char_end],
        char_start=match.char_start,
        char_end=match.char_end,
        ambiguous=term.ambiguous,
        via_compound=match.via_compound,
        llm_verdict=llm_verdict,
        suggestion_note=payload.suggestion_note,
        suggested_terms=tuple(payload.suggested_terms),
        categories=tuple(payload.categories),
    )


def detect(
    text: str,
    config: PipelineConfig,
    resources: PipelineResources,
    document_id: str = "doc",
    llm_client: LlmClient | None = None,
    ner_backend=None,
) -> AnnotatedDocument:
    """Run the full stage chain over one text.

    `llm_client` and `ner_backend` override the config-derived defaults so
    tests and the service can inject scripted or shared instances.
    """
    if config.language not in resources.automatons:
        raise ValueError(f"resources not loaded for language {config.language!r}")

    started = time.perf_counter()
    doc = preprocess(text, config.language, resources.text)
    t_preprocess = time.perf_counter()

    matches = find_matches(doc, resources.automaton(config.language))
    t_match = time.perf_counter()

    dropped: list[Diagnostic] = []
    if config.ner_enabled:
        backend = ner_backend if ner_backend is not None else _make_ner_backend(config, resources)
        try:
            entities = detect_entities(doc, backend)
        except Exception as err:
            raise PipelineStageError("ner", err) from err
        matches, ner_dropped = filter_matches(matches, entities)
        dropped.extend(
            Diagnostic(m.term_id, m.char_start, m.char_end, "ner") for m in ner_dropped)
    t_ner = time.perf_counter()

    llm_confirmed: set[RawMatch] = set()
    if config.llm_enabled:
        client = llm_client if llm_client is not None else LlmClient(config.llm)
        try:
            result = disambiguate(
                matches, doc, resources.graph, resources.templates, client,
                context_window=config.context_window)
        except LlmBackendError as err:
            raise PipelineStageError("llm", err) from err
        matches = result.kept
        llm_confirmed = {
            m for m in result.kept if resources.graph.term(m.term_id).ambiguous}
        dropped.extend(
            Diagnostic(d.match.term_id, d.match.char_start, d.match.char_end, d.reason)
            for d in result.diagnostics)
    t_llm = time.perf_counter()

    annotations = [
        _annotate(m, doc.text, resources.graph,
                  "contentious" if m in llm_confirmed else "skipped")
        for m in sorted(matches, key=lambda m: (m.char_start, -m.char_end, m.term_id))
    ]
    diagnostics = (
        sorted(dropped, key=lambda d: (d.char_start, d.char_end, d.term_id))
        if config.diagnostic_mode else []
    )
    return AnnotatedDocument(
        document_id=document_id,
        language=config.language,
        text_sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        annotations=annotations,
        diagnostics=diagnostics,
        timing_ms={
            "preprocess": (t_preprocess - started) * 1000,
            "match": (t_match - t_preprocess) * 1000,
            "ner": (t_ner - t_match) * 1000,
            "llm": (t_llm - t_ner) * 1000,
        },
    )


@dataclass(frozen=True)
class BatchFailure:
    document_id: str
    error: str


@dataclass
class BatchStats:
    documents: int
    annotations: int
    term_frequencies: dict[str, int]
    category_counts: dict[str, int]
    total_characters: int
    wall_time_ms: float
    chars_per_second: float
    failures: list[BatchFailure] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "documents": self.documents,
            "annotations": self.annotations,
            "term_frequencies": dict(sorted(self.term_frequencies.items())),
            "category_counts": dict(sorted(self.category_counts.items())),
            "total_characters": self.total_characters,
            "wall_time_ms": self.wall_time_ms,
            "chars_per_second": self.chars_per_second,
            "failures": [{"document_id": f.document_id, "error": f.error} for f in self.failures],
        }


def detect_batch(
    documents: Iterable[tuple[str, str]],
    config: PipelineConfig,
    resources: PipelineResources,
    parallelism: int = 4,
    llm_client: LlmClient | None = None,
    ner_backend=None,
) -> tuple[list[AnnotatedDocument], BatchStats]:
    """detect() over (id, text) pairs on a worker pool.

    One failing document is recorded in the stats and does not abort the
    rest.  Results come back in input order; per-document content matches a
    sequential run because all shared state (resources, verdict cache) is
    order-independent.
    """
    documents = list(documents)
    # one shared client so the verdict cache spans the whole batch
    if llm_client is None and config.llm_enabled:
        llm_client = LlmClient(config.llm)

    started = time.perf_counter()
    results: list[AnnotatedDocument] = []
    failures: list[BatchFailure] = []

    def run_one(item: tuple[str, str]) -> AnnotatedDocument:
        doc_id, text = item
        return detect(text, config, resources, document_id=doc_id,
                      llm_client=llm_client, ner_backend=ner_backend)

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = [(doc_id, pool.submit(run_one, (doc_id, text)))
                   for doc_id, text in documents]
        for doc_id, future in futures:
            try:
                results.append(future.result())
            except Exception as err:
                failures.append(BatchFailure(doc_id, str(err)))
    wall_ms = (time.perf_counter() - started) * 1000

    term_frequencies: Counter = Counter()
    category_counts: Counter = Counter()
    annotation_count = 0
    for doc in results:
        for annotation in doc.annotations:
            annotation_count += 1
            term_frequencies[annotation.term_id] += 1
            for category in annotation.categories:
                category_counts[category] += 1
    total_chars = sum(len(text) for _, text in documents)
    stats = BatchStats(
        documents=len(documents),
        annotations=annotation_count,
        term_frequencies=dict(term_frequencies),
        category_counts=dict(category_counts),
        total_characters=total_chars,
        wall_time_ms=wall_ms,
        chars_per_second=total_chars / (wall_ms / 1000) if wall_ms > 0 else 0.0,
        failures=failures,
    )
    return results, stats
